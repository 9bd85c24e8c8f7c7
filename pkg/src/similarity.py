"""Index similarity map: z-scored index profiles projected to 2-D by PCA.

Rows are indices, columns are index values across evaluation settings
(dataset, method, parameters, normalization). After row-wise z-scoring
and centred PCA, indices that behave like the PSIs land inside the
triangle spanned by PSI-P, PSI-ROC and PSI-PR.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import zscore

from .errors import ConstantRow, DegenerateTriangle, InvalidParameter, InvalidShape, RankDeficient
from .models import IndexId

logger = logging.getLogger(__name__)

SENTINEL_FACTOR = 10.0
PSI_VERTICES = (IndexId.PSI_P, IndexId.PSI_ROC, IndexId.PSI_PR)


@dataclass(frozen=True, eq=False)
class IndexProfileMatrix:
    values: np.ndarray
    row_ids: Tuple[str, ...]
    column_ids: Tuple[str, ...]
    annotations: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise InvalidShape("Profile matrix must be 2-D")
        if values.shape != (len(self.row_ids), len(self.column_ids)):
            raise InvalidShape(
                f"Profile shape {values.shape} does not match {len(self.row_ids)} rows x "
                f"{len(self.column_ids)} columns"
            )
        if values.shape[1] < 2:
            raise InvalidShape("Profile matrix needs at least 2 columns")
        if np.isnan(values).any():
            raise InvalidShape("Profile matrix contains missing values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "column_ids", tuple(self.column_ids))
        object.__setattr__(self, "annotations", tuple(self.annotations))

    def with_finite_values(self) -> "IndexProfileMatrix":
        """Replace +inf sentinels by 10x the largest finite value in their row, at least 1."""
        values = self.values.copy()
        notes = list(self.annotations)
        for i, row_id in enumerate(self.row_ids):
            row = values[i]
            infinite = np.isinf(row)
            if not infinite.any():
                continue
            finite = row[~infinite]
            if finite.size == 0:
                raise ConstantRow(f"Row {row_id} has no finite values")
            if np.any(row[infinite] < 0):
                raise InvalidShape(f"Row {row_id} contains -inf")
            # floor of 1 for rows whose finite values are all <= 0.1 (e.g. all zero)
            replacement = max(float(finite.max()) * SENTINEL_FACTOR, 1.0)
            row[infinite] = replacement
            notes.append(f"{row_id}: {int(infinite.sum())} divergent value(s) replaced by {replacement:.6g}")
            logger.warning("%s: replaced %d infinity sentinel(s) by %.6g", row_id, int(infinite.sum()), replacement)
        return IndexProfileMatrix(values, self.row_ids, self.column_ids, tuple(notes))


def merge_profiles(*profiles: IndexProfileMatrix) -> IndexProfileMatrix:
    """Concatenate profile matrices column-wise (rows must agree)."""
    if not profiles:
        raise InvalidParameter("No profiles to merge")
    row_ids = profiles[0].row_ids
    for profile in profiles[1:]:
        if profile.row_ids != row_ids:
            raise InvalidShape("Profiles to merge must share row ids in the same order")
    return IndexProfileMatrix(
        values=np.hstack([profile.values for profile in profiles]),
        row_ids=row_ids,
        column_ids=tuple(cid for profile in profiles for cid in profile.column_ids),
        annotations=tuple(note for profile in profiles for note in profile.annotations),
    )


def zscore_rows(matrix: np.ndarray) -> np.ndarray:
    """Standardize each row to mean 0 and sample standard deviation 1."""
    values = np.asarray(matrix, dtype=float)
    if values.ndim != 2:
        raise InvalidShape("z-scoring expects a 2-D matrix")
    deviations = values.std(axis=1, ddof=1)
    constant = np.flatnonzero(~(deviations > 0.0))
    if constant.size:
        raise ConstantRow(f"Row {int(constant[0])} has zero standard deviation")
    return zscore(values, axis=1, ddof=1)


@dataclass(frozen=True, eq=False)
class PrincipalComponents:
    scores: np.ndarray
    # eigenvalues of the column covariance, descending, top k
    eigenvalues: np.ndarray
    explained_ratio: np.ndarray


def principal_components(matrix: np.ndarray, k: int) -> PrincipalComponents:
    """Centred PCA via SVD of the column-centred matrix.

    Each component's score entry of largest magnitude is made positive.
    """
    values = np.asarray(matrix, dtype=float)
    n_rows, n_cols = values.shape
    if k < 1 or k > min(n_rows - 1, n_cols):
        raise InvalidParameter(f"k must lie in [1, {min(n_rows - 1, n_cols)}], got {k}")

    centred = values - values.mean(axis=0)
    left, singular, _ = np.linalg.svd(centred, full_matrices=False)
    eigenvalues = singular ** 2 / (n_rows - 1)
    tolerance = singular.max(initial=0.0) * max(values.shape) * np.finfo(float).eps
    if np.count_nonzero(singular > tolerance) < k:
        raise RankDeficient(f"Fewer than {k} positive eigenvalues")

    scores = left[:, :k] * singular[:k]
    for j in range(k):
        pivot = int(np.argmax(np.abs(scores[:, j])))
        if scores[pivot, j] < 0:
            scores[:, j] = -scores[:, j]

    total = eigenvalues.sum()
    return PrincipalComponents(
        scores=scores,
        eigenvalues=eigenvalues[:k],
        explained_ratio=eigenvalues[:k] / total if total > 0 else np.zeros(k),
    )


def pca_project(matrix: np.ndarray, k: int) -> np.ndarray:
    """Scores of the rows on the top-k principal components."""
    return principal_components(matrix, k).scores


def psi_triangle_contains(point: Sequence[float], vertices: Sequence[Sequence[float]]) -> bool:
    """Barycentric containment test, boundary counted as inside."""
    p = np.asarray(point, dtype=float)
    a, b, c = (np.asarray(v, dtype=float) for v in vertices)
    v0, v1, v2 = b - a, c - a, p - a
    det = v0[0] * v1[1] - v0[1] * v1[0]
    scale = max(np.abs(np.concatenate([a, b, c])).max(), 1.0)
    if abs(det) <= 1e-12 * scale * scale:
        raise DegenerateTriangle("Triangle vertices are collinear")
    w1 = (v2[0] * v1[1] - v2[1] * v1[0]) / det
    w2 = (v0[0] * v2[1] - v0[1] * v2[0]) / det
    w0 = 1.0 - w1 - w2
    eps = 1e-12
    return bool(w0 >= -eps and w1 >= -eps and w2 >= -eps)


@dataclass
class SimilarityMap:
    row_ids: List[str]
    coordinates: np.ndarray
    inside_triangle: Dict[str, bool]
    explained_ratio: np.ndarray
    annotations: List[str] = field(default_factory=list)


def build_similarity_map(profile: IndexProfileMatrix) -> SimilarityMap:
    """z-score, project to 2-D and flag rows inside the PSI triangle.

    The triangle test is skipped (all False) when the PSI rows are absent.
    """
    finite = profile.with_finite_values()
    coordinates = principal_components(zscore_rows(finite.values), 2)
    row_ids = list(finite.row_ids)

    vertex_rows = [row_ids.index(v.value) for v in PSI_VERTICES if v.value in row_ids]
    inside: Dict[str, bool] = {}
    if len(vertex_rows) == 3:
        vertices = [coordinates.scores[i] for i in vertex_rows]
        for i, row_id in enumerate(row_ids):
            inside[row_id] = psi_triangle_contains(coordinates.scores[i], vertices)
    else:
        logger.warning("PSI rows missing from profile; triangle membership not computed")
        inside = {row_id: False for row_id in row_ids}

    return SimilarityMap(
        row_ids=row_ids,
        coordinates=coordinates.scores,
        inside_triangle=inside,
        explained_ratio=coordinates.explained_ratio,
        annotations=list(finite.annotations),
    )


def profile_from_reports(reports: Sequence, indices: Sequence[IndexId] = None) -> IndexProfileMatrix:
    """Build an IndexProfileMatrix from one or more EvaluationReports.

    Each candidate row of each report becomes one column.
    """
    indices = list(indices or reports[0].indices)
    columns: List[str] = []
    data: List[List[float]] = []
    for report in reports:
        for row in report.rows:
            columns.append(f"{report.dataset}:{row.candidate_id}")
            data.append([row.value(index_id) for index_id in indices])
    values = np.array(data, dtype=float).T if data else np.empty((len(indices), 0))
    return IndexProfileMatrix(values, tuple(i.value for i in indices), tuple(columns))
