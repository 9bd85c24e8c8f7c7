"""Permutation null model, separability significance and BH correction.

Points stay fixed while group labels are reshuffled uniformly at random;
the index is re-evaluated on every reshuffle. The empirical p-value is the
fraction of reshuffles scoring at least as well as the true labels.

Every replicate draws from its own counter-based generator keyed on
(master seed, replicate number), so the outcome does not depend on the
order or the number of threads in which replicates run.
"""

import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np

try:
    from tqdm import tqdm
    HAS_TQDM = True
except ImportError:
    HAS_TQDM = False

from .errors import InvalidParameter, OutOfRangeP
from .indices import SeparabilityIndex, score_many
from .models import Better, IndexId, IndexScore, LabeledPointCloud
from .validity import CloudGeometry

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.01

IndexFn = Callable[[LabeledPointCloud], Union[float, IndexScore]]


@dataclass(frozen=True)
class NullModelSummary:
    """Observed index value against its label-permutation null distribution."""
    index_id: Optional[IndexId]
    observed: float
    null_mean: float
    null_se: float
    p_value: float
    replicates: int
    seed: int
    # (count + 1) / (R + 1), never zero
    p_value_conservative: float = 1.0
    n_at_least_as_good: int = 0
    diverged_replicates: int = 0
    better: Better = Better.HIGHER


def _path_key(part: Union[int, str]) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def derive_rng(seed: int, *path: Union[int, str]) -> np.random.Generator:
    """Counter-based generator for the labeled path below a master seed.

    Distinct paths give independent streams; adding a new path never
    perturbs existing ones.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_path_key(p) for p in path))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *path: Union[int, str]) -> int:
    """64-bit sub-seed for a labeled path."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_path_key(p) for p in path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def permuted_labels(cloud: LabeledPointCloud, seed: int, replicate: int) -> np.ndarray:
    """Uniform random permutation of the label sequence for one replicate."""
    return derive_rng(seed, replicate).permutation(cloud.label_array)


def _as_value(result: Union[float, IndexScore]) -> float:
    return float(result.value) if isinstance(result, IndexScore) else float(result)


def _count_at_least_as_good(null_values: np.ndarray, observed: float, better: Better) -> int:
    # weak inequality; +inf compares as maximal
    if better is Better.HIGHER:
        return int(np.count_nonzero(null_values >= observed))
    return int(np.count_nonzero(null_values <= observed))


def summarize_null(
    observed: float,
    null_values: np.ndarray,
    better: Better,
    seed: int,
    index_id: Optional[IndexId] = None,
) -> NullModelSummary:
    """Reduce null replicate values into a NullModelSummary."""
    null_values = np.asarray(null_values, dtype=float)
    replicates = int(null_values.size)
    count = _count_at_least_as_good(null_values, observed, better)
    diverged = int(np.count_nonzero(~np.isfinite(null_values)))

    if diverged:
        logger.warning(
            "%s: %d of %d null replicates diverged; null mean/SE reported as inf",
            index_id.value if index_id else "index", diverged, replicates,
        )
        null_mean = math.inf
        null_se = math.inf
    else:
        null_mean = float(null_values.mean())
        ddof = 1 if replicates > 1 else 0
        null_se = float(null_values.std(ddof=ddof) / math.sqrt(replicates))

    return NullModelSummary(
        index_id=index_id,
        observed=float(observed),
        null_mean=null_mean,
        null_se=null_se,
        p_value=count / replicates,
        replicates=replicates,
        seed=int(seed),
        p_value_conservative=(count + 1) / (replicates + 1),
        n_at_least_as_good=count,
        diverged_replicates=diverged,
        better=better,
    )


def _run_replicates(
    n_replicates: int,
    replicate_fn: Callable[[int], object],
    workers: int,
    show_progress: bool,
    description: str,
) -> list:
    replicate_ids = range(n_replicates)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            iterator = executor.map(replicate_fn, replicate_ids)
            if show_progress and HAS_TQDM:
                iterator = tqdm(iterator, total=n_replicates, desc=description)
            return list(iterator)
    if show_progress and HAS_TQDM:
        replicate_ids = tqdm(replicate_ids, total=n_replicates, desc=description)
    return [replicate_fn(r) for r in replicate_ids]


def permutation_null(
    cloud: LabeledPointCloud,
    index_fn: Union[SeparabilityIndex, IndexFn],
    replicates: int,
    seed: int,
    *,
    better: Optional[Better] = None,
    index_id: Optional[IndexId] = None,
    workers: int = 1,
    show_progress: bool = False,
) -> NullModelSummary:
    """Label-permutation null model for one index on one cloud.

    ``index_fn`` is either a SeparabilityIndex (direction and id taken from
    it, distance matrix shared across replicates) or any callable returning
    a float or an IndexScore; plain callables default to higher-is-better.
    """
    if replicates < 1:
        raise InvalidParameter(f"replicates must be >= 1, got {replicates}")

    if isinstance(index_fn, SeparabilityIndex):
        index = index_fn
        index_id = index_id or index.index_id
        better = better or index.index_id.better
        geometry = None if index.index_id.is_psi else CloudGeometry.of(cloud)

        def evaluate(target: LabeledPointCloud) -> float:
            return _as_value(index.score(target, geometry))
    else:
        better = better or (index_id.better if index_id else Better.HIGHER)

        def evaluate(target: LabeledPointCloud) -> float:
            return _as_value(index_fn(target))

    observed = evaluate(cloud)

    def replicate(r: int) -> float:
        return evaluate(cloud.with_labels(permuted_labels(cloud, seed, r)))

    null_values = np.array(
        _run_replicates(replicates, replicate, workers, show_progress, f"null {index_id.value if index_id else ''}"),
        dtype=float,
    )
    summary = summarize_null(observed, null_values, better, seed, index_id)
    logger.debug(
        "Null model %s: observed=%.6g mean=%.6g p=%.4g (R=%d)",
        index_id, summary.observed, summary.null_mean, summary.p_value, replicates,
    )
    return summary


def permutation_null_many(
    cloud: LabeledPointCloud,
    indices: Sequence[SeparabilityIndex],
    replicates: int,
    seed: int,
    *,
    workers: int = 1,
    show_progress: bool = False,
) -> Dict[IndexId, NullModelSummary]:
    """Null models for several indices sharing the same label permutations.

    Replicate r permutes labels exactly as ``permutation_null`` does for the
    same seed, so each summary equals the single-index result.
    """
    if replicates < 1:
        raise InvalidParameter(f"replicates must be >= 1, got {replicates}")
    geometry = CloudGeometry.of(cloud) if any(not i.index_id.is_psi for i in indices) else None

    observed = score_many(cloud, indices, geometry)

    def replicate(r: int) -> Dict[IndexId, float]:
        shuffled = cloud.with_labels(permuted_labels(cloud, seed, r))
        return {key: score.value for key, score in score_many(shuffled, indices, geometry).items()}

    rows = _run_replicates(replicates, replicate, workers, show_progress, "null model")
    summaries: Dict[IndexId, NullModelSummary] = {}
    for index in indices:
        key = index.index_id
        null_values = np.array([row[key] for row in rows], dtype=float)
        summaries[key] = summarize_null(observed[key].value, null_values, key.better, seed, key)
    return summaries


def bh_adjust(p_values: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size == 0:
        return p
    if np.any(~np.isfinite(p)) or np.any((p < 0.0) | (p > 1.0)):
        raise OutOfRangeP("All p-values must lie in [0, 1]")

    m = p.size
    order = np.argsort(p, kind="mergesort")
    scaled = p[order] * m / np.arange(1, m + 1)
    stepped = np.minimum.accumulate(scaled[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(stepped, 1.0)
    return adjusted


def is_significant(summary: Union[NullModelSummary, float], alpha: float = DEFAULT_ALPHA) -> bool:
    """True when the p-value is strictly below alpha."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    p_value = summary.p_value if isinstance(summary, NullModelSummary) else float(summary)
    return p_value < alpha
