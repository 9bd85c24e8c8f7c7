#!/usr/bin/env python
"""Time the swiss-roll pipeline (generate, score nine indices, null models) and report latency stats."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.config import SepScoreConfig
from src.datasets import SwissRollSpec, generate_swiss_roll
from src.indices import create_index, parse_index_ids, score_many
from src.significance import permutation_null_many


def run_once(n_points: int, replicates: int, seed: int, workers: int, indices: str) -> Dict[str, Any]:
    config = SepScoreConfig()
    t0 = time.perf_counter()
    cloud = generate_swiss_roll(SwissRollSpec(n_points=n_points, seed=seed))
    t_gen = time.perf_counter()
    scorers = [create_index(index_id, config.projection.centroid) for index_id in parse_index_ids(indices)]
    scores = score_many(cloud, scorers)
    t_score = time.perf_counter()
    null = permutation_null_many(cloud, scorers, replicates, seed, workers=workers) if replicates > 0 else {}
    t_null = time.perf_counter()
    return {
        "generate_ms": (t_gen - t0) * 1000.0,
        "score_ms": (t_score - t_gen) * 1000.0,
        "null_ms": (t_null - t_score) * 1000.0,
        "total_ms": (t_null - t0) * 1000.0,
        "scores": {index_id.key: score.value for index_id, score in scores.items()},
        "p_values": {index_id.key: summary.p_value for index_id, summary in null.items()},
    }


def main() -> None:
    parser = argparse.ArgumentParser(description="Run a runtime probe over repeated swiss-roll pipelines.")
    parser.add_argument("--runs", type=int, default=3, help="Number of repeated runs (default: 3).")
    parser.add_argument("--n", type=int, default=723, help="Swiss-roll size (default: 723).")
    parser.add_argument("--replicates", type=int, default=1000, help="Null model replicates (default: 1000).")
    parser.add_argument("--seed", type=int, default=1, help="Master seed (default: 1).")
    parser.add_argument("--workers", type=int, default=1, help="Null model worker threads (default: 1).")
    parser.add_argument("--indices", default="all", help="Indices to score (default: all).")
    parser.add_argument("--output", type=Path, default=Path("output/runtime_probe.json"), help="Where to write JSON results.")
    args = parser.parse_args()

    per_run: List[Dict[str, Any]] = []
    totals_ms: List[float] = []
    for idx in range(1, args.runs + 1):
        result = run_once(args.n, args.replicates, args.seed, args.workers, args.indices)
        per_run.append(result)
        totals_ms.append(result["total_ms"])
        print(f"[{idx}/{args.runs}] total={result['total_ms']:.1f} ms  null={result['null_ms']:.1f} ms")

    summary = {
        "runs": len(per_run),
        "n_points": args.n,
        "replicates": args.replicates,
        "workers": args.workers,
        "avg_total_ms": sum(totals_ms) / len(totals_ms),
        "p50_total_ms": float(np.percentile(totals_ms, 50)),
        "p90_total_ms": float(np.percentile(totals_ms, 90)),
    }

    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(json.dumps({"summary": summary, "per_run": per_run}, indent=2), encoding="utf-8")

    print("\nRuntime Summary")
    print("=" * 24)
    print(f"Avg: {summary['avg_total_ms']:.1f} ms | P50: {summary['p50_total_ms']:.1f} | P90: {summary['p90_total_ms']:.1f}")
    print(f"Results saved to: {args.output}")


if __name__ == "__main__":
    main()
