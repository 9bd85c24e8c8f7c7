"""Projection separability: centroid-line projection and the three PSI statistics.

For every pair of groups both groups are projected onto the line joining
their centroids, reduced to a scalar line coordinate, and compared with a
Mann-Whitney p-value, the ROC AUC and the precision-recall AUC. The
overall PSI values are arithmetic means over all group pairs.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.stats import mannwhitneyu, rankdata
from sklearn.metrics import roc_auc_score

from .errors import CoincidentCentroids, EmptyGroupInput, EmptySubset, UnknownLabel
from .models import GroupPair, LabeledPointCloud

logger = logging.getLogger(__name__)

# Exact Mann-Whitney enumeration is used up to this combined sample size.
EXACT_MW_MAX_N = 20
MODE_SIGNIFICANT_DIGITS = 12


class CentroidMode(str, Enum):
    MEAN = "mean"
    MEDIAN = "median"
    MODE = "mode"


DEFAULT_CENTROID = CentroidMode.MEDIAN


@dataclass(frozen=True)
class PairSeparability:
    """PSI statistics of one unordered group pair."""
    label_a: str
    label_b: str
    p: float
    auc_roc: float
    auc_pr: float
    positive_label: str
    coincident: bool = False


@dataclass(frozen=True)
class PsiResult:
    psi_p: float
    psi_roc: float
    psi_pr: float
    per_pair: Tuple[PairSeparability, ...]


def _as_mode(mode: Union[CentroidMode, str]) -> CentroidMode:
    return mode if isinstance(mode, CentroidMode) else CentroidMode(str(mode).lower())


def _column_mode(column: np.ndarray) -> float:
    # Continuous data: round to 12 significant digits, most frequent wins,
    # ties go to the smallest value (np.unique sorts ascending).
    rounded = np.array([float(f"{value:.{MODE_SIGNIFICANT_DIGITS - 1}e}") for value in column])
    values, counts = np.unique(rounded, return_counts=True)
    return float(values[np.argmax(counts)])


def centroid(points: np.ndarray, mode: Union[CentroidMode, str] = DEFAULT_CENTROID) -> np.ndarray:
    """Coordinate-wise mean, median or mode of a set of points."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] == 0:
        raise EmptySubset("Cannot compute the centroid of an empty subset")

    mode = _as_mode(mode)
    if mode is CentroidMode.MEAN:
        return points.mean(axis=0)
    if mode is CentroidMode.MEDIAN:
        return np.median(points, axis=0)
    return np.array([_column_mode(points[:, j]) for j in range(points.shape[1])])


def line_tolerance(a: np.ndarray, b: np.ndarray) -> float:
    """Length below which two centroids are treated as coincident."""
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return 1e-12 * (1.0 + scale)


def _direction(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    if float(np.linalg.norm(ab)) <= line_tolerance(a, b):
        raise CoincidentCentroids("Centroids coincide; the projection line is undefined")
    return ab


def line_coordinate(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> Union[float, np.ndarray]:
    """Scalar position t = (AP.AB)/(AB.AB) of p along the line a->b.

    Accepts a single point or a matrix of points (one per row).
    """
    ab = _direction(a, b)
    ap = np.asarray(p, dtype=float) - np.asarray(a, dtype=float)
    t = (ap @ ab) / (ab @ ab)
    return float(t) if np.ndim(t) == 0 else t


def project_to_line(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthogonal projection A + t*AB of p onto the infinite line through a and b."""
    ab = _direction(a, b)
    t = line_coordinate(p, a, b)
    return np.asarray(a, dtype=float) + np.multiply.outer(t, ab)


def _two_samples(xs: Sequence[float], ys: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.size == 0 or y.size == 0:
        raise EmptyGroupInput("Both samples must be non-empty")
    return x, y


def mann_whitney_p(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Two-sided Mann-Whitney p-value.

    Exact enumeration for small tie-free samples, otherwise the normal
    approximation with tie and continuity correction.
    """
    x, y = _two_samples(xs, ys)
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return 1.0
    has_ties = np.unique(pooled).size < pooled.size
    method = "exact" if pooled.size <= EXACT_MW_MAX_N and not has_ties else "asymptotic"
    result = mannwhitneyu(x, y, alternative="two-sided", use_continuity=True, method=method)
    p_value = float(result.pvalue)
    if not np.isfinite(p_value):
        return 1.0
    return min(1.0, max(0.0, p_value))


def mann_whitney_u(pos: Sequence[float], neg: Sequence[float]) -> float:
    """U statistic of ``pos`` from the rank sum (average ranks for ties)."""
    x, y = _two_samples(pos, neg)
    ranks = rankdata(np.concatenate([x, y]))
    return float(ranks[: x.size].sum() - x.size * (x.size + 1) / 2.0)


def auc_roc(pos: Sequence[float], neg: Sequence[float]) -> float:
    """Probability that a positive outranks a negative, ties counting one half."""
    x, y = _two_samples(pos, neg)
    y_true = np.concatenate([np.ones(x.size), np.zeros(y.size)])
    return float(roc_auc_score(y_true, np.concatenate([x, y])))


def auc_pr(pos: Sequence[float], neg: Sequence[float]) -> float:
    """Average precision by step integration over positives.

    Scores are sorted descending; at equal score positives are processed
    before negatives.
    """
    x, y = _two_samples(pos, neg)
    scores = np.concatenate([x, y])
    is_positive = np.concatenate([np.ones(x.size, dtype=bool), np.zeros(y.size, dtype=bool)])
    order = np.lexsort((~is_positive, -scores))
    hits = is_positive[order]
    true_positives = np.cumsum(hits)
    ranks = np.arange(1, scores.size + 1)
    precision_at_hits = true_positives[hits] / ranks[hits]
    return float(precision_at_hits.sum() / x.size)


def project_pair(
    cloud: LabeledPointCloud,
    label_a: str,
    label_b: str,
    mode: Union[CentroidMode, str] = DEFAULT_CENTROID,
) -> GroupPair:
    """Reduce two groups to 1-D coordinates on their centroid line."""
    for label in (label_a, label_b):
        if label not in cloud.groups:
            raise UnknownLabel(f"Unknown label: {label!r}")
    points_a = cloud.group_points(label_a)
    points_b = cloud.group_points(label_b)
    ca = centroid(points_a, mode)
    cb = centroid(points_b, mode)
    return GroupPair(
        label_a=label_a,
        label_b=label_b,
        projected_a=np.atleast_1d(line_coordinate(points_a, ca, cb)),
        projected_b=np.atleast_1d(line_coordinate(points_b, ca, cb)),
    )


def psi_pair(
    cloud: LabeledPointCloud,
    label_a: str,
    label_b: str,
    mode: Union[CentroidMode, str] = DEFAULT_CENTROID,
) -> PairSeparability:
    """PSI statistics for one pair of groups.

    The line always runs from the lexicographically smaller label's centroid
    to the larger one's, so the result does not depend on argument order.
    The positive class is the group whose centroid has the larger line
    coordinate, ties going to the lexicographically larger label.
    """
    for label in (label_a, label_b):
        if label not in cloud.groups:
            raise UnknownLabel(f"Unknown label: {label!r}")
    first, second = sorted((label_a, label_b))
    n_first = cloud.groups[first].size
    n_second = cloud.groups[second].size

    try:
        pair = project_pair(cloud, first, second, mode)
    except CoincidentCentroids:
        prevalence = n_second / (n_first + n_second)
        logger.debug("Coincident centroids for %s/%s; returning neutral statistics", first, second)
        return PairSeparability(first, second, 1.0, 0.5, prevalence, positive_label=second, coincident=True)

    # Centroids sit at t=0 (first) and t=1 (second) by construction.
    positive, negative, positive_label = pair.projected_b, pair.projected_a, second
    logger.debug("Pair %s/%s: positive class %s", first, second, positive_label)

    return PairSeparability(
        label_a=first,
        label_b=second,
        p=mann_whitney_p(positive, negative),
        auc_roc=auc_roc(positive, negative),
        auc_pr=auc_pr(positive, negative),
        positive_label=positive_label,
    )


def psi_all(
    cloud: LabeledPointCloud,
    mode: Union[CentroidMode, str] = DEFAULT_CENTROID,
    workers: int = 1,
) -> PsiResult:
    """PSI-P, PSI-ROC and PSI-PR averaged over all unordered group pairs."""
    pairs = list(itertools.combinations(cloud.group_labels, 2))

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            per_pair: List[PairSeparability] = list(
                executor.map(lambda pair: psi_pair(cloud, pair[0], pair[1], mode), pairs)
            )
    else:
        per_pair = [psi_pair(cloud, a, b, mode) for a, b in pairs]

    return PsiResult(
        psi_p=float(np.mean([item.p for item in per_pair])),
        psi_roc=float(np.mean([item.auc_roc for item in per_pair])),
        psi_pr=float(np.mean([item.auc_pr for item in per_pair])),
        per_pair=tuple(per_pair),
    )
