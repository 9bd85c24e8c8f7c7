"""Shared data model: labeled point clouds and index results."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateLabels, EmptyGroup, InvalidShape, NonFinite, UnknownLabel

logger = logging.getLogger(__name__)


class Better(str, Enum):
    """Direction in which an index improves."""
    HIGHER = "higher"
    LOWER = "lower"


class IndexId(str, Enum):
    """Identifiers of the nine separability indices."""
    PSI_P = "PSI_P"
    PSI_ROC = "PSI_ROC"
    PSI_PR = "PSI_PR"
    SH = "SH"
    CH = "CH"
    DN = "DN"
    BZ = "BZ"
    DB_STAR = "DB_STAR"
    TH = "TH"

    @property
    def better(self) -> Better:
        return Better.LOWER if self is IndexId.PSI_P else Better.HIGHER

    @property
    def bounded_range(self) -> Optional[Tuple[float, float]]:
        """Closed interval of admissible values, None when unbounded.

        DB* is (0, 1] in theory; 0 is reachable only as the coincident
        centroid sentinel so the closed interval is reported.
        """
        return _BOUNDS.get(self)

    @property
    def key(self) -> str:
        """Lowercase name used in reports, e.g. ``psi_roc``."""
        return self.value.lower()

    @property
    def is_psi(self) -> bool:
        return self in (IndexId.PSI_P, IndexId.PSI_ROC, IndexId.PSI_PR)


_BOUNDS: Dict[IndexId, Tuple[float, float]] = {
    IndexId.PSI_P: (0.0, 1.0),
    IndexId.PSI_ROC: (0.0, 1.0),
    IndexId.PSI_PR: (0.0, 1.0),
    IndexId.TH: (0.0, 1.0),
    IndexId.SH: (-1.0, 1.0),
    IndexId.DB_STAR: (0.0, 1.0),
}

ALL_INDICES: Tuple[IndexId, ...] = tuple(IndexId)


def oriented_value(value: float, better: Better) -> float:
    """Map a value so that larger always means better.

    Infinity sentinels stay maximal for higher-better indices.
    """
    return value if better is Better.HIGHER else -value


@dataclass(frozen=True)
class IndexScore:
    """A scalar index value with its direction and sentinel flags."""
    index_id: IndexId
    value: float
    # True when the value is the +inf divergence sentinel
    diverged: bool = False
    # True when a 0/0 guard produced the value
    degenerate: bool = False

    @property
    def better(self) -> Better:
        return self.index_id.better

    @property
    def bounded_range(self) -> Optional[Tuple[float, float]]:
        return self.index_id.bounded_range

    @property
    def oriented(self) -> float:
        return oriented_value(self.value, self.better)

    @classmethod
    def of(cls, index_id: IndexId, value: float, degenerate: bool = False) -> "IndexScore":
        value = float(value)
        return cls(index_id=index_id, value=value, diverged=bool(np.isinf(value)), degenerate=degenerate)


@dataclass(frozen=True, eq=False)
class GroupPair:
    """Two groups reduced to 1-D coordinates on their centroid line."""
    label_a: str
    label_b: str
    projected_a: np.ndarray
    projected_b: np.ndarray


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class LabeledPointCloud:
    """N points in D dimensions, each carrying an opaque group label.

    Construction validates every invariant; instances are immutable.
    ``declared_labels`` lets a caller announce groups up front (e.g. from a
    categorical column); a declared group without members is an error.
    """
    points: np.ndarray
    labels: Tuple[str, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)
    declared_labels: Optional[Tuple[str, ...]] = None
    groups: Mapping[str, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        points = np.array(self.points, dtype=float, copy=True)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        labels = tuple(str(label) for label in self.labels)

        groups: Dict[str, np.ndarray] = {}
        if points.ndim == 2 and len(labels) == points.shape[0]:
            label_array = np.asarray(labels, dtype=object)
            for label in sorted(set(labels)):
                groups[label] = _readonly(np.flatnonzero(label_array == label))

        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "metadata", dict(self.metadata or {}))
        if self.declared_labels is not None:
            object.__setattr__(self, "declared_labels", tuple(str(label) for label in self.declared_labels))
        object.__setattr__(self, "groups", groups)
        validate(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledPointCloud):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
        )

    __hash__ = object.__hash__

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_dims(self) -> int:
        return self.points.shape[1]

    @property
    def group_labels(self) -> Tuple[str, ...]:
        """Distinct labels in lexicographic order."""
        return tuple(self.groups.keys())

    @property
    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=object)

    def group_points(self, label: str) -> np.ndarray:
        if label not in self.groups:
            raise UnknownLabel(f"Unknown label: {label!r}")
        return self.points[self.groups[label]]

    def group_sizes(self) -> Dict[str, int]:
        return {label: int(rows.size) for label, rows in self.groups.items()}

    def with_labels(self, labels: Sequence[str]) -> "LabeledPointCloud":
        """Same points, new labels (used by the permutation null model)."""
        return LabeledPointCloud(points=self.points, labels=tuple(labels), metadata=self.metadata)

    def with_points(self, points: np.ndarray) -> "LabeledPointCloud":
        return LabeledPointCloud(points=points, labels=self.labels, metadata=self.metadata)

    def subset(self, rows: Iterable[int]) -> "LabeledPointCloud":
        rows = np.asarray(list(rows), dtype=int)
        metadata = {
            key: np.asarray(value)[rows] if _is_per_point(value, self.n_points) else value
            for key, value in self.metadata.items()
        }
        return LabeledPointCloud(
            points=self.points[rows],
            labels=tuple(self.labels[i] for i in rows),
            metadata=metadata,
        )


def _is_per_point(value: Any, n_points: int) -> bool:
    return isinstance(value, np.ndarray) and value.ndim >= 1 and len(value) == n_points


def validate(cloud: LabeledPointCloud) -> None:
    """Check every LabeledPointCloud invariant; raise on the first violation.

    Side-effect free and idempotent.
    """
    points = cloud.points
    if points.ndim != 2:
        raise InvalidShape(f"Points must be a 2-D matrix, got {points.ndim} dimensions")
    n_points, n_dims = points.shape
    if n_points < 2:
        raise InvalidShape(f"At least 2 points required, got {n_points}")
    if n_dims < 1:
        raise InvalidShape("At least 1 coordinate column required")
    if len(cloud.labels) != n_points:
        raise InvalidShape(f"{len(cloud.labels)} labels for {n_points} points")

    finite = np.isfinite(points)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise NonFinite(f"Non-finite coordinate at row {row}, column {col}: {points[row, col]}")

    if cloud.declared_labels is not None:
        missing = sorted(set(cloud.declared_labels) - set(cloud.groups))
        if missing:
            raise EmptyGroup(f"Declared groups without members: {', '.join(missing)}")
    if any(rows.size == 0 for rows in cloud.groups.values()):
        raise EmptyGroup("Every group must have at least one member")

    if len(cloud.groups) < 2:
        raise DegenerateLabels(f"At least 2 distinct labels required, got {len(cloud.groups)}")

    covered = np.concatenate(list(cloud.groups.values()))
    if covered.size != n_points or np.unique(covered).size != n_points:
        raise InvalidShape("Groups do not partition the point set")
