#!/usr/bin/env python
"""Check neutral baselines and null-model calibration of the separability indices.

Random labels on Gaussian clouds should give TH and PSI-ROC close to 0.5,
and permutation p-values under random labels should be close to uniform.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List

import numpy as np
from scipy.stats import kstest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.indices import create_index
from src.models import IndexId, LabeledPointCloud
from src.significance import derive_rng, permutation_null

try:
    from tqdm import tqdm
    HAS_TQDM = True
except ImportError:
    HAS_TQDM = False


@dataclass
class CalibrationResult:
    baseline_seeds: int
    mean_th: float
    mean_psi_roc: float
    calibration_trials: int
    replicates: int
    ks_statistic: float
    ks_pvalue: float


def random_label_cloud(seed: int, n_points: int = 500, n_dims: int = 2) -> LabeledPointCloud:
    """Standard normal points with balanced, randomly assigned labels."""
    rng = derive_rng(seed, "calibration")
    points = rng.standard_normal((n_points, n_dims))
    labels = rng.permutation(np.repeat(["a", "b"], [n_points // 2, n_points - n_points // 2]))
    return LabeledPointCloud(points=points, labels=tuple(labels))


def neutral_baselines(seeds: int) -> tuple:
    th = create_index(IndexId.TH)
    psi_roc = create_index(IndexId.PSI_ROC)
    th_values: List[float] = []
    roc_values: List[float] = []
    for seed in range(seeds):
        cloud = random_label_cloud(seed)
        th_values.append(th.score(cloud).value)
        roc_values.append(psi_roc.score(cloud).value)
    return float(np.mean(th_values)), float(np.mean(roc_values))


def null_pvalues(trials: int, replicates: int, n_points: int) -> np.ndarray:
    psi_roc = create_index(IndexId.PSI_ROC)
    iterator = range(trials)
    if HAS_TQDM:
        iterator = tqdm(iterator, desc="calibration")
    p_values = [
        permutation_null(random_label_cloud(1000 + trial, n_points), psi_roc, replicates, seed=trial).p_value
        for trial in iterator
    ]
    return np.asarray(p_values)


def main() -> None:
    parser = argparse.ArgumentParser(description="Neutral-baseline and null-model calibration check.")
    parser.add_argument("--seeds", type=int, default=50, help="Random-label clouds for the baseline means (default: 50).")
    parser.add_argument("--trials", type=int, default=200, help="Random-label clouds for the KS check (default: 200).")
    parser.add_argument("--replicates", type=int, default=200, help="Null replicates per trial (default: 200).")
    parser.add_argument("--n", type=int, default=60, help="Points per calibration cloud (default: 60).")
    parser.add_argument("--output", type=Path, default=Path("output/calibration_check.json"), help="Where to write JSON results.")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    mean_th, mean_roc = neutral_baselines(args.seeds)
    p_values = null_pvalues(args.trials, args.replicates, args.n)
    ks = kstest(p_values, "uniform")

    result = CalibrationResult(
        baseline_seeds=args.seeds,
        mean_th=mean_th,
        mean_psi_roc=mean_roc,
        calibration_trials=args.trials,
        replicates=args.replicates,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
    )
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(json.dumps(asdict(result), indent=2), encoding="utf-8")

    print("\nCalibration Summary")
    print("=" * 24)
    print(f"Mean TH: {mean_th:.4f} | Mean PSI-ROC: {mean_roc:.4f}  (expected near 0.5)")
    print(f"KS distance to Uniform[0,1]: {ks.statistic:.4f} (p={ks.pvalue:.3g})")
    print(f"Results saved to: {args.output}")


if __name__ == "__main__":
    main()
