"""Report emission: JSON, CSV and text renderings of scores, null models and maps.

Non-finite values are written as the strings ``"inf"`` / ``"-inf"`` so the
JSON stays standard; every rendering is a pure function of its input so
repeated runs produce identical bytes.
"""

import io
import json
import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import ParseError
from .evaluation import CandidateRow, EvaluationReport
from .models import IndexId, IndexScore
from .significance import NullModelSummary, is_significant
from .similarity import IndexProfileMatrix, SimilarityMap

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
BANNER = "=" * 50


def json_number(value: float) -> Any:
    """Finite floats pass through; infinities become strings."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def dump_json(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def null_to_dict(summary: NullModelSummary, p_bh: Optional[float] = None) -> Dict[str, Any]:
    payload = {
        "mean": json_number(summary.null_mean),
        "se": json_number(summary.null_se),
        "p": json_number(summary.p_value),
    }
    if p_bh is not None:
        payload["p_bh"] = json_number(p_bh)
    payload["p_conservative"] = json_number(summary.p_value_conservative)
    return payload


def scores_to_dict(scores: Mapping[IndexId, IndexScore]) -> Dict[str, Any]:
    return {index_id.key: json_number(score.value) for index_id, score in scores.items()}


def score_result_to_dict(
    dataset: str,
    scores: Mapping[IndexId, IndexScore],
    null: Optional[Mapping[IndexId, NullModelSummary]] = None,
    seed: Optional[int] = None,
    alpha: Optional[float] = None,
) -> Dict[str, Any]:
    """Payload of the ``score`` command: flat index fields plus optional null models."""
    payload: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "dataset": dataset}
    payload.update(scores_to_dict(scores))
    flags = {
        index_id.key: [name for name in ("diverged", "degenerate") if getattr(score, name)]
        for index_id, score in scores.items()
        if score.diverged or score.degenerate
    }
    if flags:
        payload["flags"] = flags
    if null:
        payload["null"] = {index_id.key: null_to_dict(summary) for index_id, summary in null.items()}
        payload["replicates"] = next(iter(null.values())).replicates
        payload["seed"] = seed
        if alpha is not None:
            payload["alpha"] = alpha
            payload["significant"] = {
                index_id.key: is_significant(summary, alpha) for index_id, summary in null.items()
            }
    return payload


def nullmodel_to_dict(summary: NullModelSummary, alpha: float) -> Dict[str, Any]:
    """Payload of the ``nullmodel`` command."""
    return {
        "schema_version": SCHEMA_VERSION,
        "index": summary.index_id.key if summary.index_id else None,
        "observed": json_number(summary.observed),
        "null_mean": json_number(summary.null_mean),
        "null_se": json_number(summary.null_se),
        "p_value": json_number(summary.p_value),
        "p_value_conservative": json_number(summary.p_value_conservative),
        "replicates": summary.replicates,
        "seed": summary.seed,
        "diverged_replicates": summary.diverged_replicates,
        "alpha": alpha,
        "significant": is_significant(summary, alpha),
    }


def _candidate_to_dict(row: CandidateRow) -> Dict[str, Any]:
    candidate = row.candidate
    payload = {
        "method": candidate.method_name,
        "params": {key: value for key, value in candidate.params},
        "normalization": candidate.normalization.value,
        "scores": scores_to_dict(row.scores),
    }
    if row.null:
        payload["null"] = {
            index_id.key: null_to_dict(summary, row.p_bh.get(index_id))
            for index_id, summary in row.null.items()
        }
    return payload


def report_to_dict(report: EvaluationReport) -> Dict[str, Any]:
    """JSON payload of an EvaluationReport."""
    n_optima = {
        method: {index_id.key: len(chosen[index_id]) for index_id in report.indices}
        for method, chosen in report.best_per_method.items()
    }
    best_per_method = {
        method: {index_id.key: [row.candidate_id for row in chosen[index_id]] for index_id in report.indices}
        for method, chosen in report.best_per_method.items()
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": report.dataset,
        "replicates": report.replicates,
        "seed": report.seed,
        "centroid": report.centroid,
        "indices": [index_id.key for index_id in report.indices],
        "candidates": [_candidate_to_dict(row) for row in report.rows],
        "best_per_index": {index_id.key: ids for index_id, ids in report.best_per_index.items()},
        "best_per_method": best_per_method,
        "n_optima": n_optima,
        "avg_rank": [
            {key: (json_number(value) if isinstance(value, float) else value) for key, value in record.items()}
            for record in report.avg_rank.to_dict(orient="records")
        ],
        "hd_gap": {
            method: {index_id.key: json_number(gap) for index_id, gap in gaps.items()}
            for method, gaps in report.hd_gap.items()
        },
        "annotations": list(report.annotations),
    }


def report_to_frame(report: EvaluationReport) -> pd.DataFrame:
    """One CSV row per candidate with values and significance per index."""
    records = []
    for row in report.rows:
        record: Dict[str, Any] = {
            "method": row.candidate.method_name,
            "params": row.candidate.params_label,
            "normalization": row.candidate.normalization.value,
        }
        for index_id in report.indices:
            record[index_id.key] = row.value(index_id)
            summary = row.null.get(index_id)
            if summary is not None:
                record[f"{index_id.key}_null_mean"] = summary.null_mean
                record[f"{index_id.key}_null_se"] = summary.null_se
                record[f"{index_id.key}_p"] = summary.p_value
                record[f"{index_id.key}_p_bh"] = row.p_bh.get(index_id, summary.p_value)
        records.append(record)
    return pd.DataFrame(records)


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
    return buffer.getvalue()


def _format_value(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


def format_index_line(index_id: IndexId, value: float, summary: Optional[NullModelSummary] = None) -> str:
    line = f"{index_id.value:<8} {_format_value(value)}"
    if summary is not None:
        line += f" ({_format_value(summary.null_mean)} ± {_format_value(summary.null_se)}) p={summary.p_value:.4g}"
    return line


def render_scores_text(
    dataset: str,
    scores: Mapping[IndexId, IndexScore],
    null: Optional[Mapping[IndexId, NullModelSummary]] = None,
) -> str:
    report = BANNER + "\n"
    report += f"Separability: {dataset}\n"
    report += BANNER + "\n\n"
    for index_id, score in scores.items():
        report += format_index_line(index_id, score.value, (null or {}).get(index_id)) + "\n"
    report += "\n" + BANNER + "\n"
    return report


def render_report_text(report: EvaluationReport) -> str:
    """Human-readable evaluation report."""
    text = BANNER + "\n"
    text += f"Separability Evaluation Report: {report.dataset}\n"
    text += BANNER + "\n\n"

    for row in report.rows:
        text += f"{row.candidate_id}\n"
        for index_id in report.indices:
            text += "  " + format_index_line(index_id, row.value(index_id), row.null.get(index_id))
            if index_id in row.p_bh:
                text += f" p_bh={row.p_bh[index_id]:.4g}"
            text += "\n"
        text += "\n"

    text += "Best per index:\n"
    for index_id, ids in report.best_per_index.items():
        text += f"  {index_id.value:<8} [{len(ids)}] {'; '.join(ids)}\n"

    text += "\nAVG rank:\n"
    text += report.avg_rank.to_string(index=False, float_format=lambda v: f"{v:.2f}") + "\n"

    if report.hd_gap:
        text += "\nGap to HD (positive = better than HD):\n"
        for method, gaps in report.hd_gap.items():
            cells = ", ".join(f"{index_id.value}={_format_value(gap)}" for index_id, gap in gaps.items())
            text += f"  {method}: {cells}\n"

    if report.annotations:
        text += "\nNotes:\n"
        text += "".join(f"  - {note}\n" for note in report.annotations)

    text += "\n" + BANNER + "\n"
    return text


def similarity_to_dict(similarity: SimilarityMap) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "explained_ratio": [json_number(v) for v in similarity.explained_ratio],
        "points": [
            {
                "index": row_id,
                "pc1": json_number(similarity.coordinates[i, 0]),
                "pc2": json_number(similarity.coordinates[i, 1]),
                "inside_psi_triangle": similarity.inside_triangle[row_id],
            }
            for i, row_id in enumerate(similarity.row_ids)
        ],
        "annotations": list(similarity.annotations),
    }


def similarity_to_frame(similarity: SimilarityMap) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "index": similarity.row_ids,
            "pc1": similarity.coordinates[:, 0],
            "pc2": similarity.coordinates[:, 1],
            "inside_psi_triangle": [similarity.inside_triangle[r] for r in similarity.row_ids],
        }
    )


def render_similarity_text(similarity: SimilarityMap) -> str:
    text = BANNER + "\nIndex Similarity Map\n" + BANNER + "\n\n"
    ratios = ", ".join(f"{v:.3f}" for v in similarity.explained_ratio)
    text += f"explained variance ratio: {ratios}\n\n"
    for i, row_id in enumerate(similarity.row_ids):
        marker = "inside" if similarity.inside_triangle[row_id] else "outside"
        text += f"{row_id:<8} {similarity.coordinates[i, 0]: .4f} {similarity.coordinates[i, 1]: .4f}  {marker}\n"
    if similarity.annotations:
        text += "\nNotes:\n" + "".join(f"  - {note}\n" for note in similarity.annotations)
    text += "\n" + BANNER + "\n"
    return text


def profile_from_report_json(payload: Any) -> IndexProfileMatrix:
    """IndexProfileMatrix from one report payload or a list of them.

    Rows follow the index order of the first report; every candidate of
    every report becomes one column named ``dataset:method[params]/NORM``.
    """
    reports: List[Mapping[str, Any]] = payload if isinstance(payload, list) else [payload]
    if not reports or "candidates" not in reports[0]:
        raise ParseError("Not an evaluation report: missing 'candidates'")

    keys: Sequence[str] = reports[0].get("indices") or list(reports[0]["candidates"][0]["scores"])
    row_ids = tuple(IndexId(key.upper()).value for key in keys)
    columns, data = [], []
    for report in reports:
        for candidate in report["candidates"]:
            params = ",".join(f"{k}={v}" for k, v in (candidate.get("params") or {}).items())
            columns.append(f"{report.get('dataset')}:{candidate['method']}[{params}]/{candidate['normalization']}")
            try:
                data.append([float(candidate["scores"][key]) for key in keys])
            except KeyError as exc:
                raise ParseError(f"Candidate {columns[-1]} lacks index {exc}") from exc
    return IndexProfileMatrix(np.array(data, dtype=float).T, row_ids, tuple(columns))
