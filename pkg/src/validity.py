"""Baseline cluster validity indices over Euclidean distance.

Silhouette (macro-averaged over clusters), Calinski-Harabasz, Dunn, the
generalized Dunn variant with mean-linkage separation (BZ), the bounded
Davies-Bouldin transform DB* = 1/(1+DB), and Thornton's nearest-neighbour
label agreement. All centroids here are arithmetic means.

Divergent indices return ``math.inf`` instead of raising; the index
registry tags such values as diverged.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics import calinski_harabasz_score, silhouette_samples

from .models import LabeledPointCloud

logger = logging.getLogger(__name__)


class CloudGeometry:
    """Label-independent geometry of a point set, computed once.

    Holds the full Euclidean distance matrix and each point's nearest other
    point. Both depend only on the coordinates, so they are shared
    read-only across indices and across permutation replicates.
    """

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        self.points = points
        self.distances = squareform(pdist(points, metric="euclidean"))
        self.distances.flags.writeable = False
        self._nearest: Optional[np.ndarray] = None

    @classmethod
    def of(cls, cloud: LabeledPointCloud) -> "CloudGeometry":
        return cls(cloud.points)

    @property
    def nearest_neighbour(self) -> np.ndarray:
        """Index of each point's nearest other point; ties go to the lowest row."""
        if self._nearest is None:
            masked = self.distances.copy()
            np.fill_diagonal(masked, np.inf)
            # argmin returns the first minimum, i.e. the lowest row index
            self._nearest = np.argmin(masked, axis=1)
            self._nearest.flags.writeable = False
        return self._nearest

    def matches(self, cloud: LabeledPointCloud) -> bool:
        return self.points.shape == cloud.points.shape and (
            self.points is cloud.points or np.array_equal(self.points, cloud.points)
        )


@dataclass(frozen=True)
class CviBundle:
    sh: float
    ch: float
    dn: float
    bz: float
    db_star: float
    th: float
    db: float


def _geometry(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry]) -> CloudGeometry:
    if geometry is None:
        return CloudGeometry.of(cloud)
    return geometry


def _membership(cloud: LabeledPointCloud) -> np.ndarray:
    """One-hot N x G membership matrix, columns in lexicographic label order."""
    onehot = np.zeros((cloud.n_points, len(cloud.groups)))
    for column, rows in enumerate(cloud.groups.values()):
        onehot[rows, column] = 1.0
    return onehot


def _mean_centroids(cloud: LabeledPointCloud) -> np.ndarray:
    return np.vstack([cloud.points[rows].mean(axis=0) for rows in cloud.groups.values()])


def _ratio_with_guard(numerator: float, denominator: float) -> float:
    # x/0 diverges, 0/0 resolves to 0
    if denominator == 0.0:
        return math.inf if numerator > 0.0 else 0.0
    return numerator / denominator


def _label_codes(cloud: LabeledPointCloud) -> np.ndarray:
    """Integer group code per point, codes in lexicographic label order."""
    codes = np.empty(cloud.n_points, dtype=int)
    for code, rows in enumerate(cloud.groups.values()):
        codes[rows] = code
    return codes


def silhouette(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> float:
    """Mean over clusters of the mean per-sample silhouette in each cluster.

    Singleton clusters contribute a silhouette of 0.
    """
    if len(cloud.groups) == cloud.n_points:
        logger.debug("Every cluster is a singleton: silhouette set to 0")
        return 0.0
    distances = _geometry(cloud, geometry).distances
    codes = _label_codes(cloud)
    per_sample = silhouette_samples(distances, codes, metric="precomputed")
    return float(np.mean([per_sample[rows].mean() for rows in cloud.groups.values()]))


def scatter_terms(cloud: LabeledPointCloud) -> Tuple[float, float]:
    """Between-group (SS_B) and within-group (SS_W) sums of squares."""
    overall = cloud.points.mean(axis=0)
    ss_between = 0.0
    ss_within = 0.0
    for rows in cloud.groups.values():
        members = cloud.points[rows]
        centre = members.mean(axis=0)
        ss_between += rows.size * float(np.sum((centre - overall) ** 2))
        ss_within += float(np.sum((members - centre) ** 2))
    return ss_between, ss_within


def calinski_harabasz(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> float:
    """(SS_B / SS_W) * ((T - N) / (N - 1)) for T samples in N clusters."""
    del geometry  # scatter terms need coordinates only
    ss_between, ss_within = scatter_terms(cloud)
    if ss_within == 0.0:
        if ss_between == 0.0:
            logger.debug("CH: all points identical, returning 0")
        return _ratio_with_guard(ss_between, 0.0)
    return float(calinski_harabasz_score(cloud.points, _label_codes(cloud)))


def dunn(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> float:
    """Minimum single-linkage separation over maximum cluster diameter."""
    distances = _geometry(cloud, geometry).distances
    label_codes = _label_codes(cloud)
    same = label_codes[:, None] == label_codes[None, :]

    separation = float(distances[~same].min())
    diameter = float(distances[same].max())
    return _ratio_with_guard(separation, diameter)


def bezdek(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> float:
    """Generalized Dunn index with mean-linkage separation.

    Separation is the mean distance between members of two clusters;
    diameter is twice the mean distance of members to their mean centroid.
    """
    distances = _geometry(cloud, geometry).distances
    onehot = _membership(cloud)
    sizes = onehot.sum(axis=0)
    linkage = (onehot.T @ distances @ onehot) / np.outer(sizes, sizes)
    off_diagonal = ~np.eye(len(sizes), dtype=bool)
    separation = float(linkage[off_diagonal].min())

    diameter = 0.0
    for rows in cloud.groups.values():
        members = cloud.points[rows]
        spread = np.linalg.norm(members - members.mean(axis=0), axis=1).mean()
        diameter = max(diameter, 2.0 * float(spread))
    return _ratio_with_guard(separation, diameter)


def davies_bouldin_star(
    cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None
) -> Tuple[float, float]:
    """Return (DB, DB*) with DB* = 1 / (1 + DB).

    Coincident mean centroids make DB infinite and DB* = 0.
    """
    del geometry
    centres = _mean_centroids(cloud)
    spreads = np.array([
        float(np.linalg.norm(cloud.points[rows] - centres[k], axis=1).mean())
        for k, rows in enumerate(cloud.groups.values())
    ])
    centre_distances = squareform(pdist(centres, metric="euclidean"))

    n_clusters = len(spreads)
    ratios = np.empty(n_clusters)
    for i in range(n_clusters):
        worst = 0.0
        for j in range(n_clusters):
            if i == j:
                continue
            if centre_distances[i, j] == 0.0:
                worst = math.inf
                break
            worst = max(worst, (spreads[i] + spreads[j]) / centre_distances[i, j])
        ratios[i] = worst

    db = float(ratios.mean())
    if math.isinf(db):
        logger.debug("DB: coincident centroids, DB* set to 0")
        return db, 0.0
    return db, 1.0 / (1.0 + db)


def thornton(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> float:
    """Fraction of points whose nearest other point shares their label."""
    nearest = _geometry(cloud, geometry).nearest_neighbour
    label_codes = _label_codes(cloud)
    return float(np.mean(label_codes == label_codes[nearest]))


def cvi_bundle(cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> CviBundle:
    """All six baseline indices over one shared distance matrix."""
    geometry = _geometry(cloud, geometry)
    db, db_star = davies_bouldin_star(cloud, geometry)
    return CviBundle(
        sh=silhouette(cloud, geometry),
        ch=calinski_harabasz(cloud, geometry),
        dn=dunn(cloud, geometry),
        bz=bezdek(cloud, geometry),
        db_star=db_star,
        th=thornton(cloud, geometry),
        db=db,
    )
