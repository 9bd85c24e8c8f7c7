"""Synthetic data and sampling helpers.

The tripartite swiss roll cuts the spiral parameter range into bands
separated by gaps; each band is one group. Generator constants are fixed
defaults: t spans [1.5*pi, 4.5*pi] and the height axis spans [0, 10].
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import GroupTooSmall, InvalidParameter
from .models import LabeledPointCloud
from .significance import derive_rng

logger = logging.getLogger(__name__)

T_MIN = 1.5 * math.pi
T_MAX = 4.5 * math.pi
HEIGHT = 10.0


@dataclass(frozen=True)
class SwissRollSpec:
    n_points: int = 723
    n_arcs: int = 3
    # fraction of the t range given over to gaps between arcs
    gap_fraction: float = 0.2
    noise_sd: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_arcs < 2:
            raise InvalidParameter(f"n_arcs must be >= 2, got {self.n_arcs}")
        if self.n_points < 2 * self.n_arcs:
            raise InvalidParameter(f"n_points must be >= {2 * self.n_arcs}, got {self.n_points}")
        if not 0.0 < self.gap_fraction < 1.0:
            raise InvalidParameter(f"gap_fraction must lie in (0, 1), got {self.gap_fraction}")
        if self.noise_sd < 0.0:
            raise InvalidParameter(f"noise_sd must be >= 0, got {self.noise_sd}")


def arc_bands(spec: SwissRollSpec):
    """(start, end) of each arc's t band, in increasing t."""
    span = T_MAX - T_MIN
    gap = spec.gap_fraction * span / (spec.n_arcs - 1)
    band = (1.0 - spec.gap_fraction) * span / spec.n_arcs
    return [(T_MIN + k * (band + gap), T_MIN + k * (band + gap) + band) for k in range(spec.n_arcs)]


def generate_swiss_roll(spec: SwissRollSpec = SwissRollSpec()) -> LabeledPointCloud:
    """Points (t cos t, h, t sin t) on disjoint t bands, labelled by band.

    t is stratified within each band so the arcs have no holes; the spiral
    parameter of every point is kept in ``metadata['t']``.
    """
    spec.validate()
    rng = derive_rng(spec.seed, "swiss-roll")
    sizes = [spec.n_points // spec.n_arcs + (1 if k < spec.n_points % spec.n_arcs else 0)
             for k in range(spec.n_arcs)]

    t_parts, labels = [], []
    for k, ((start, end), size) in enumerate(zip(arc_bands(spec), sizes)):
        strata = (np.arange(size) + rng.uniform(size=size)) / size
        t_parts.append(start + strata * (end - start))
        labels.extend([str(k + 1)] * size)
    t = np.concatenate(t_parts)
    h = rng.uniform(0.0, HEIGHT, size=t.size)

    points = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    if spec.noise_sd > 0.0:
        points = points + rng.normal(0.0, spec.noise_sd, size=points.shape)

    logger.info("Generated swiss roll: %d points in %d arcs", t.size, spec.n_arcs)
    return LabeledPointCloud(points=points, labels=tuple(labels), metadata={"t": t})


def subsample_balanced(cloud: LabeledPointCloud, per_group: int, seed: int) -> LabeledPointCloud:
    """Uniform sample without replacement of ``per_group`` points from every group.

    Original row order is preserved.
    """
    if per_group < 1:
        raise InvalidParameter(f"per_group must be >= 1, got {per_group}")
    too_small = {label: size for label, size in cloud.group_sizes().items() if size < per_group}
    if too_small:
        raise GroupTooSmall(f"Groups smaller than {per_group}: {too_small}")

    chosen = []
    for label, rows in cloud.groups.items():
        rng = derive_rng(seed, "subsample", label)
        chosen.append(rng.choice(rows, size=per_group, replace=False))
    return cloud.subset(np.sort(np.concatenate(chosen)))
