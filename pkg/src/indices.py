"""Index registry: one scorer per separability index behind a common interface."""

import logging
from abc import ABC, abstractmethod
from typing import Dict, Iterable, List, Optional, Sequence, Union

from .models import ALL_INDICES, IndexId, IndexScore, LabeledPointCloud
from .projection import DEFAULT_CENTROID, CentroidMode, PsiResult, psi_all
from .validity import (
    CloudGeometry,
    bezdek,
    calinski_harabasz,
    davies_bouldin_star,
    dunn,
    scatter_terms,
    silhouette,
    thornton,
)

logger = logging.getLogger(__name__)

_CLI_NAMES: Dict[str, IndexId] = {
    "psi-p": IndexId.PSI_P,
    "psi-roc": IndexId.PSI_ROC,
    "psi-pr": IndexId.PSI_PR,
    "sh": IndexId.SH,
    "ch": IndexId.CH,
    "dn": IndexId.DN,
    "bz": IndexId.BZ,
    "db-star": IndexId.DB_STAR,
    "db*": IndexId.DB_STAR,
    "th": IndexId.TH,
}


def parse_index_ids(spec: Union[str, Iterable[str], None]) -> List[IndexId]:
    """Parse ``"psi-roc,th"``-style selections; ``all`` or None selects all nine.

    Duplicates are dropped; the canonical index order is kept.
    """
    if spec is None:
        return list(ALL_INDICES)
    tokens = spec.split(",") if isinstance(spec, str) else list(spec)
    selected = set()
    for token in tokens:
        name = str(token).strip().lower().replace("_", "-")
        if not name:
            continue
        if name == "all":
            return list(ALL_INDICES)
        if name not in _CLI_NAMES:
            raise ValueError(f"Unknown index '{token}'. Supported values: {', '.join(_CLI_NAMES)}, all")
        selected.add(_CLI_NAMES[name])
    if not selected:
        raise ValueError("No index selected")
    return [index_id for index_id in ALL_INDICES if index_id in selected]


class SeparabilityIndex(ABC):
    """Abstract scorer mapping a labeled cloud to an IndexScore."""

    index_id: IndexId

    @abstractmethod
    def score(self, cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> IndexScore:
        """Score the cloud; ``geometry`` may carry a precomputed distance matrix."""

    def __call__(self, cloud: LabeledPointCloud) -> IndexScore:
        return self.score(cloud)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.index_id.value})"


class ProjectionIndex(SeparabilityIndex):
    """PSI-P, PSI-ROC or PSI-PR."""

    def __init__(self, index_id: IndexId, centroid: Union[CentroidMode, str] = DEFAULT_CENTROID):
        if not index_id.is_psi:
            raise ValueError(f"{index_id.value} is not a projection separability index")
        self.index_id = index_id
        self.centroid = CentroidMode(centroid)

    def pick(self, result: PsiResult) -> IndexScore:
        value = {
            IndexId.PSI_P: result.psi_p,
            IndexId.PSI_ROC: result.psi_roc,
            IndexId.PSI_PR: result.psi_pr,
        }[self.index_id]
        return IndexScore.of(self.index_id, value)

    def score(self, cloud: LabeledPointCloud, geometry: Optional[CloudGeometry] = None) -> IndexScore:
        del geometry
        return self.pick(psi_all(cloud, self.centroid))


class SilhouetteIndex(SeparabilityIndex):
    index_id = IndexId.SH

    def score(self, cloud, geometry=None):
        return IndexScore.of(self.index_id, silhouette(cloud, geometry))


class CalinskiHarabaszIndex(SeparabilityIndex):
    index_id = IndexId.CH

    def score(self, cloud, geometry=None):
        ss_between, ss_within = scatter_terms(cloud)
        degenerate = ss_between == 0.0 and ss_within == 0.0
        return IndexScore.of(self.index_id, calinski_harabasz(cloud, geometry), degenerate=degenerate)


class DunnIndex(SeparabilityIndex):
    index_id = IndexId.DN

    def score(self, cloud, geometry=None):
        return IndexScore.of(self.index_id, dunn(cloud, geometry))


class BezdekIndex(SeparabilityIndex):
    index_id = IndexId.BZ

    def score(self, cloud, geometry=None):
        return IndexScore.of(self.index_id, bezdek(cloud, geometry))


class DaviesBouldinStarIndex(SeparabilityIndex):
    index_id = IndexId.DB_STAR

    def score(self, cloud, geometry=None):
        db, db_star = davies_bouldin_star(cloud, geometry)
        # DB* itself stays bounded; the sentinel is DB = inf -> DB* = 0
        return IndexScore(self.index_id, db_star, diverged=False, degenerate=db == float("inf"))


class ThorntonIndex(SeparabilityIndex):
    index_id = IndexId.TH

    def score(self, cloud, geometry=None):
        return IndexScore.of(self.index_id, thornton(cloud, geometry))


_CVI_CLASSES = {
    IndexId.SH: SilhouetteIndex,
    IndexId.CH: CalinskiHarabaszIndex,
    IndexId.DN: DunnIndex,
    IndexId.BZ: BezdekIndex,
    IndexId.DB_STAR: DaviesBouldinStarIndex,
    IndexId.TH: ThorntonIndex,
}


def create_index(
    index_id: Union[IndexId, str],
    centroid: Union[CentroidMode, str] = DEFAULT_CENTROID,
) -> SeparabilityIndex:
    """Factory for index scorers."""
    if not isinstance(index_id, IndexId):
        index_id = parse_index_ids(str(index_id))[0]
    if index_id.is_psi:
        return ProjectionIndex(index_id, centroid)
    return _CVI_CLASSES[index_id]()


def score_many(
    cloud: LabeledPointCloud,
    indices: Sequence[SeparabilityIndex],
    geometry: Optional[CloudGeometry] = None,
) -> Dict[IndexId, IndexScore]:
    """Score several indices on one cloud.

    PSI scorers sharing a centroid mode share one projection pass, and CVIs
    share one distance matrix.
    """
    if geometry is None and any(not index.index_id.is_psi for index in indices):
        geometry = CloudGeometry.of(cloud)

    psi_cache: Dict[CentroidMode, PsiResult] = {}
    scores: Dict[IndexId, IndexScore] = {}
    for index in indices:
        if isinstance(index, ProjectionIndex):
            if index.centroid not in psi_cache:
                psi_cache[index.centroid] = psi_all(cloud, index.centroid)
            scores[index.index_id] = index.pick(psi_cache[index.centroid])
        else:
            scores[index.index_id] = index.score(cloud, geometry)
    return scores
