"""Evaluation harness: score embedding candidates, select tuning parameters, rank methods."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .config import SepScoreConfig
from .errors import InvalidParameter, ManifestError, NegativeInputForLog, ZeroSum
from .indices import create_index, score_many
from .models import IndexId, IndexScore, LabeledPointCloud, oriented_value
from .projection import CentroidMode
from .significance import NullModelSummary, bh_adjust, derive_seed, permutation_null_many

logger = logging.getLogger(__name__)

HD_METHOD = "hd"
DEFAULT_TIE_TOLERANCE = 1e-9


class Normalization(str, Enum):
    NON = "NON"
    DRS = "DRS"
    DCS = "DCS"
    LOG = "LOG"


def normalize(matrix: np.ndarray, scheme: Union[Normalization, str]) -> np.ndarray:
    """Apply a data normalization.

    DRS divides each row by its sum, DCS each column by its sum, LOG takes
    log10(x + 1); NON returns an unchanged copy.
    """
    scheme = Normalization(str(scheme).upper()) if not isinstance(scheme, Normalization) else scheme
    values = np.array(matrix, dtype=float, copy=True)
    if scheme is Normalization.NON:
        return values
    if scheme is Normalization.DRS:
        sums = values.sum(axis=1, keepdims=True)
        if np.any(sums == 0.0):
            raise ZeroSum(f"Row {int(np.flatnonzero(sums.ravel() == 0.0)[0])} sums to zero")
        return values / sums
    if scheme is Normalization.DCS:
        sums = values.sum(axis=0, keepdims=True)
        if np.any(sums == 0.0):
            raise ZeroSum(f"Column {int(np.flatnonzero(sums.ravel() == 0.0)[0])} sums to zero")
        return values / sums
    if np.any(values < 0.0):
        raise NegativeInputForLog("LOG normalization requires non-negative values")
    return np.log10(values + 1.0)


@dataclass(frozen=True)
class EmbeddingCandidate:
    """One (method, parameter setting, normalization) point cloud to score."""
    method_name: str
    params: Tuple[Tuple[str, Any], ...]
    normalization: Normalization
    cloud: LabeledPointCloud = field(compare=False, repr=False)

    @classmethod
    def create(
        cls,
        method_name: str,
        cloud: LabeledPointCloud,
        params: Optional[Mapping[str, Any]] = None,
        normalization: Union[Normalization, str] = Normalization.NON,
    ) -> "EmbeddingCandidate":
        if not isinstance(normalization, Normalization):
            normalization = Normalization(str(normalization).upper())
        return cls(
            method_name=str(method_name),
            params=tuple((str(k), v) for k, v in (params or {}).items()),
            normalization=normalization,
            cloud=cloud,
        )

    @property
    def params_label(self) -> str:
        return ",".join(f"{key}={value}" for key, value in self.params)

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.method_name, self.params_label, self.normalization.value)

    @property
    def candidate_id(self) -> str:
        return f"{self.method_name}[{self.params_label}]/{self.normalization.value}"


@dataclass(frozen=True)
class CandidateRow:
    """Scores and significance for one candidate."""
    candidate: EmbeddingCandidate
    scores: Mapping[IndexId, IndexScore]
    null: Mapping[IndexId, NullModelSummary] = field(default_factory=dict)
    p_bh: Mapping[IndexId, float] = field(default_factory=dict)

    @property
    def method_name(self) -> str:
        return self.candidate.method_name

    @property
    def candidate_id(self) -> str:
        return self.candidate.candidate_id

    def value(self, index_id: IndexId) -> float:
        return self.scores[index_id].value


@dataclass
class EvaluationReport:
    """Everything produced by one evaluation run."""
    dataset: str
    indices: List[IndexId]
    rows: List[CandidateRow]
    best_per_index: Dict[IndexId, List[str]]
    # method -> index -> rows attaining that method's optimum
    best_per_method: Dict[str, Dict[IndexId, List[CandidateRow]]]
    avg_rank: pd.DataFrame
    # method -> index -> best value minus HD value, sign oriented so > 0 beats HD
    hd_gap: Dict[str, Dict[IndexId, float]] = field(default_factory=dict)
    replicates: int = 0
    seed: int = 0
    centroid: str = CentroidMode.MEDIAN.value
    annotations: List[str] = field(default_factory=list)


def _check_unique(candidates: Sequence[EmbeddingCandidate]) -> None:
    seen = set()
    for candidate in candidates:
        if candidate.key in seen:
            raise ManifestError(f"Duplicate candidate {candidate.candidate_id}")
        seen.add(candidate.key)


def score_candidate(
    candidate: EmbeddingCandidate,
    indices: Iterable[IndexId],
    null_replicates: int,
    seed: int,
    centroid: Union[CentroidMode, str] = CentroidMode.MEDIAN,
    workers: int = 1,
    show_progress: bool = False,
) -> CandidateRow:
    """Compute every requested index on the candidate's cloud.

    With ``null_replicates`` >= 1 each index is paired with its permutation
    null model; all indices share the same label permutations.
    """
    scorers = [create_index(index_id, centroid) for index_id in indices]
    if not scorers:
        raise InvalidParameter("At least one index is required")
    scores = score_many(candidate.cloud, scorers)
    null: Dict[IndexId, NullModelSummary] = {}
    if null_replicates > 0:
        null = permutation_null_many(
            candidate.cloud, scorers, null_replicates, seed,
            workers=workers, show_progress=show_progress,
        )
    logger.info("Scored %s on %d indices", candidate.candidate_id, len(scorers))
    return CandidateRow(candidate=candidate, scores=scores, null=null)


def _is_tie(value: float, best: float, tolerance: float) -> bool:
    if math.isinf(best) or math.isinf(value):
        return value == best
    return math.isclose(value, best, rel_tol=tolerance, abs_tol=0.0)


def select_best(
    rows: Sequence[CandidateRow],
    index_id: IndexId,
    tolerance: float = DEFAULT_TIE_TOLERANCE,
) -> List[CandidateRow]:
    """All rows tying the direction-aware optimum of one index.

    Plural optima are kept, in input order.
    """
    scored = [row for row in rows if index_id in row.scores]
    if not scored:
        return []
    oriented = [oriented_value(row.value(index_id), index_id.better) for row in scored]
    best = max(oriented)
    return [row for row, value in zip(scored, oriented) if _is_tie(value, best, tolerance)]


def adjust_grid_pvalues(rows: Sequence[CandidateRow]) -> List[CandidateRow]:
    """BH-adjust null-model p-values per (method, index) across the parameter grid."""
    families: Dict[Tuple[str, IndexId], List[int]] = defaultdict(list)
    for position, row in enumerate(rows):
        for index_id in row.null:
            families[(row.method_name, index_id)].append(position)

    adjusted: List[Dict[IndexId, float]] = [dict(row.p_bh) for row in rows]
    for (method, index_id), positions in families.items():
        raw = [rows[pos].null[index_id].p_value for pos in positions]
        for pos, value in zip(positions, bh_adjust(raw)):
            adjusted[pos][index_id] = float(value)
    return [replace(row, p_bh=p_bh) for row, p_bh in zip(rows, adjusted)]


def avg_rank_table(
    best_values: Mapping[str, Mapping[IndexId, float]],
    indices: Sequence[IndexId],
) -> pd.DataFrame:
    """Direction-aware rank of each method per index and their average.

    Rank 1 is best; ties share the mean of their rank positions. Rows are
    sorted ascending by AVG rank, then by method name.
    """
    methods = sorted(best_values)
    table = pd.DataFrame(index=methods)
    for index_id in indices:
        oriented = np.array([oriented_value(best_values[m][index_id], index_id.better) for m in methods])
        # rankdata ranks ascending, so rank the negation
        table[index_id.key] = rankdata(-oriented, method="average")
    table["avg_rank"] = table[[index_id.key for index_id in indices]].mean(axis=1)
    table.index.name = "method"
    return table.reset_index().sort_values(["avg_rank", "method"], kind="mergesort").reset_index(drop=True)


class SeparabilityEvaluator:
    """Score a set of embedding candidates and assemble an EvaluationReport."""

    def __init__(self, config: Optional[SepScoreConfig] = None):
        """
        Initialize the evaluator.

        Args:
            config: Configuration object (environment defaults when omitted)
        """
        self.config = config or SepScoreConfig()

    def score(
        self,
        candidates: Sequence[EmbeddingCandidate],
        indices: Sequence[IndexId],
        replicates: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> List[CandidateRow]:
        """Score every candidate; each candidate's null model seed derives from its key."""
        _check_unique(candidates)
        replicates = self.config.null_model.replicates if replicates is None else replicates
        seed = self.config.seed if seed is None else seed
        rows = []
        for candidate in sorted(candidates, key=lambda c: c.key):
            rows.append(
                score_candidate(
                    candidate,
                    indices,
                    null_replicates=replicates,
                    seed=derive_seed(seed, "candidate", *candidate.key),
                    centroid=self.config.projection.centroid,
                    workers=self.config.null_model.workers,
                    show_progress=self.config.null_model.show_progress,
                )
            )
        return rows

    def evaluate(
        self,
        candidates: Sequence[EmbeddingCandidate],
        indices: Sequence[IndexId],
        dataset: str = "dataset",
        replicates: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> EvaluationReport:
        """
        Run the full evaluation.

        Args:
            candidates: Embedding candidates (HD included as method ``hd``)
            indices: Indices to compute
            dataset: Dataset name recorded in the report
            replicates: Null model replicates (0 disables significance)
            seed: Master seed

        Returns:
            EvaluationReport with per-candidate rows, per-index optima and AVG ranks
        """
        if not candidates:
            raise InvalidParameter("No candidates to evaluate")
        replicates = self.config.null_model.replicates if replicates is None else replicates
        seed = self.config.seed if seed is None else seed
        indices = list(indices)

        rows = self.score(candidates, indices, replicates=replicates, seed=seed)
        if replicates > 0:
            rows = adjust_grid_pvalues(rows)

        tolerance = self.config.harness.tie_tolerance
        best_per_index = {
            index_id: [row.candidate_id for row in select_best(rows, index_id, tolerance)]
            for index_id in indices
        }

        by_method: Dict[str, List[CandidateRow]] = defaultdict(list)
        for row in rows:
            by_method[row.method_name].append(row)
        best_per_method = {
            method: {index_id: select_best(method_rows, index_id, tolerance) for index_id in indices}
            for method, method_rows in sorted(by_method.items())
        }
        best_values = {
            method: {index_id: chosen[index_id][0].value(index_id) for index_id in indices}
            for method, chosen in best_per_method.items()
        }

        report = EvaluationReport(
            dataset=dataset,
            indices=indices,
            rows=rows,
            best_per_index=best_per_index,
            best_per_method=best_per_method,
            avg_rank=avg_rank_table(best_values, indices),
            hd_gap=self._hd_gap(best_values, indices),
            replicates=replicates,
            seed=seed,
            centroid=str(self.config.projection.centroid),
            annotations=self._annotations(rows),
        )
        logger.info("Evaluated %d candidates across %d methods", len(rows), len(by_method))
        return report

    def compare_configurations(self, report: EvaluationReport, index_id: IndexId) -> pd.DataFrame:
        """Per-method view of one index: best value, tied optima count and settings."""
        records = []
        for method, chosen in report.best_per_method.items():
            best_rows = chosen[index_id]
            record = {
                "method": method,
                "value": best_rows[0].value(index_id),
                "n_optima": len(best_rows),
                "settings": "; ".join(row.candidate_id for row in best_rows),
            }
            summary = best_rows[0].null.get(index_id)
            if summary is not None:
                record.update(null_mean=summary.null_mean, null_se=summary.null_se, p_value=summary.p_value)
            records.append(record)
        return pd.DataFrame(records)

    @staticmethod
    def _hd_gap(
        best_values: Mapping[str, Mapping[IndexId, float]], indices: Sequence[IndexId]
    ) -> Dict[str, Dict[IndexId, float]]:
        if HD_METHOD not in best_values:
            return {}
        reference = best_values[HD_METHOD]
        gaps: Dict[str, Dict[IndexId, float]] = {}
        for method, values in best_values.items():
            if method == HD_METHOD:
                continue
            gaps[method] = {}
            for index_id in indices:
                ours = oriented_value(values[index_id], index_id.better)
                theirs = oriented_value(reference[index_id], index_id.better)
                if math.isinf(ours) and math.isinf(theirs) and ours == theirs:
                    gaps[method][index_id] = 0.0
                else:
                    gaps[method][index_id] = ours - theirs
        return gaps

    @staticmethod
    def _annotations(rows: Sequence[CandidateRow]) -> List[str]:
        notes = []
        for row in rows:
            sizes = row.candidate.cloud.group_sizes()
            singletons = sorted(label for label, size in sizes.items() if size == 1)
            if singletons and IndexId.SH in row.scores:
                notes.append(f"{row.candidate_id}: silhouette of singleton groups {singletons} set to 0")
            for index_id, score in row.scores.items():
                if score.diverged:
                    notes.append(f"{row.candidate_id}: {index_id.value} diverged (+inf)")
                if score.degenerate:
                    notes.append(f"{row.candidate_id}: {index_id.value} degenerate (0/0 guard)")
        return notes
