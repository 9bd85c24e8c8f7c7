"""Data ingestion: labeled CSV clouds, candidate manifests and profile matrices."""

import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from .errors import ManifestError, MissingLabelColumn, ParseError
from .evaluation import HD_METHOD, EmbeddingCandidate, Normalization, normalize
from .indices import parse_index_ids
from .models import LabeledPointCloud
from .similarity import IndexProfileMatrix

logger = logging.getLogger(__name__)

STDIN_PATH = "-"
FLOAT_FORMAT = "%.17g"
T_COLUMN = "t"

PathOrStream = Union[str, Path, TextIO]


def _read_frame(source: PathOrStream) -> pd.DataFrame:
    """Read a headed CSV with every cell kept as text."""
    if isinstance(source, (str, Path)) and str(source) == STDIN_PATH:
        source = sys.stdin
    try:
        return pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as exc:
        raise ParseError(f"File not found: {source}") from exc
    except pd.errors.EmptyDataError as exc:
        raise ParseError(f"No header row in {source}") from exc
    except pd.errors.ParserError as exc:
        raise ParseError(f"Malformed CSV in {source}: {exc}") from exc


def _parse_numeric(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    """Columns as a float matrix; the first unparseable cell raises ParseError.

    Literal nan/inf are accepted here and rejected later by validation.
    """
    values = np.empty((len(frame), len(columns)), dtype=float)
    for j, column in enumerate(columns):
        text = frame[column].str.strip()
        parsed = pd.to_numeric(text, errors="coerce")
        bad = parsed.isna() & ~text.str.lower().isin(["nan", "+nan", "-nan"])
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            # +2: one for the header, one for 1-based numbering
            raise ParseError(
                f"Cannot parse {text.iloc[row]!r} as a number at line {row + 2}, column {column!r}",
                row=row + 2,
                column=column,
            )
        # to_numeric only flags bad cells; its fast parser can be 1 ulp off
        try:
            values[:, j] = text.astype(float).to_numpy()
        except ValueError as exc:
            raise ParseError(f"Cannot parse column {column!r} as numbers: {exc}", column=column) from exc
    return values


def load_labeled_csv(
    path: PathOrStream,
    label_column: str = "label",
    drop_columns: Sequence[str] = (),
) -> LabeledPointCloud:
    """
    Load a labeled point cloud from a headed CSV file.

    Args:
        path: File path, open text stream, or ``-`` for stdin
        label_column: Name of the column holding group labels
        drop_columns: Columns kept as per-point metadata instead of coordinates

    Returns:
        Validated LabeledPointCloud with coordinates in header order
    """
    frame = _read_frame(path)
    if label_column not in frame.columns:
        raise MissingLabelColumn(
            f"Label column {label_column!r} not found; columns are: {', '.join(frame.columns)}"
        )
    dropped = [c for c in drop_columns if c in frame.columns and c != label_column]
    coordinate_columns = [c for c in frame.columns if c != label_column and c not in dropped]

    points = _parse_numeric(frame, coordinate_columns)
    metadata: Dict[str, Any] = {"columns": tuple(coordinate_columns)}
    if dropped:
        for column, values in zip(dropped, _parse_numeric(frame, dropped).T):
            metadata[column] = values
    labels = tuple(frame[label_column].str.strip())

    cloud = LabeledPointCloud(points=points, labels=labels, metadata=metadata)
    logger.info(
        "Loaded %d points x %d dims in %d groups from %s",
        cloud.n_points, cloud.n_dims, len(cloud.groups), getattr(path, "name", path),
    )
    return cloud


def write_labeled_csv(
    cloud: LabeledPointCloud,
    path_or_stream: PathOrStream,
    label_column: str = "label",
    include_t: bool = False,
) -> None:
    """Write a cloud as CSV with 17 significant digits so reloading is exact.

    Coordinate columns are named from ``metadata['columns']`` when present,
    otherwise ``x1..xD``. With ``include_t`` the per-point ``t`` metadata is
    appended as an extra column.
    """
    names = list(cloud.metadata.get("columns") or [f"x{j + 1}" for j in range(cloud.n_dims)])
    frame = pd.DataFrame(np.asarray(cloud.points), columns=names)
    if include_t and T_COLUMN in cloud.metadata:
        frame[T_COLUMN] = np.asarray(cloud.metadata[T_COLUMN], dtype=float)
    frame[label_column] = list(cloud.labels)

    frame.to_csv(path_or_stream, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


@dataclass(frozen=True)
class ManifestEntry:
    method_name: str
    params: Tuple[Tuple[str, Any], ...]
    normalization: Normalization
    data_path: Path


@dataclass
class CandidateManifest:
    """Embedding candidates to evaluate on one dataset."""
    dataset: str
    label_column: str
    entries: List[ManifestEntry] = field(default_factory=list)
    drop_columns: Tuple[str, ...] = ()


def load_candidate_manifest(path: Union[str, Path]) -> CandidateManifest:
    """
    Parse a JSON candidate manifest.

    Expected layout::

        {"dataset": "swissroll", "label_column": "label",
         "candidates": [{"method": "isomap", "params": {"k": 5},
                         "normalization": "NON", "path": "isomap_k5.csv"}]}

    Data paths are resolved relative to the manifest's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ManifestError(f"Manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"Manifest {path} is not valid JSON: {exc}") from exc

    if not isinstance(raw, dict) or not isinstance(raw.get("candidates"), list):
        raise ManifestError(f"Manifest {path} must be an object with a 'candidates' list")

    manifest = CandidateManifest(
        dataset=str(raw.get("dataset") or path.stem),
        label_column=str(raw.get("label_column") or "label"),
        drop_columns=tuple(raw.get("drop_columns") or ()),
    )
    seen = set()
    for position, item in enumerate(raw["candidates"]):
        if not isinstance(item, dict) or "method" not in item or "path" not in item:
            raise ManifestError(f"Candidate #{position} needs 'method' and 'path'")
        params = item.get("params") or {}
        if not isinstance(params, dict):
            raise ManifestError(f"Candidate #{position}: 'params' must be an object")
        try:
            normalization = Normalization(str(item.get("normalization", "NON")).upper())
        except ValueError as exc:
            raise ManifestError(f"Candidate #{position}: unknown normalization {item.get('normalization')!r}") from exc

        entry = ManifestEntry(
            method_name=str(item["method"]),
            params=tuple((str(k), v) for k, v in params.items()),
            normalization=normalization,
            data_path=(path.parent / str(item["path"])).resolve(),
        )
        key = (entry.method_name, entry.params, entry.normalization)
        if key in seen:
            raise ManifestError(f"Duplicate candidate {entry.method_name} {dict(entry.params)} {normalization.value}")
        seen.add(key)
        if not entry.data_path.is_file():
            raise ManifestError(f"Candidate #{position}: data file not found: {entry.data_path}")
        manifest.entries.append(entry)

    logger.info("Manifest %s: %d candidates for dataset %s", path, len(manifest.entries), manifest.dataset)
    return manifest


def load_candidates(manifest: CandidateManifest) -> List[EmbeddingCandidate]:
    """Load every manifest entry into an EmbeddingCandidate.

    For the ``hd`` method the normalization is applied to the loaded matrix;
    embeddings were computed from normalized data, so for them it is
    provenance only.
    """
    candidates = []
    for entry in manifest.entries:
        cloud = load_labeled_csv(entry.data_path, manifest.label_column, manifest.drop_columns)
        if entry.method_name == HD_METHOD and entry.normalization is not Normalization.NON:
            cloud = cloud.with_points(normalize(cloud.points, entry.normalization))
        candidates.append(
            EmbeddingCandidate(
                method_name=entry.method_name,
                params=entry.params,
                normalization=entry.normalization,
                cloud=cloud,
            )
        )
    return candidates


def _row_id(raw: str) -> str:
    try:
        return parse_index_ids(raw)[0].value
    except ValueError:
        return raw


def load_profile_matrix(path: PathOrStream) -> IndexProfileMatrix:
    """Load an IndexProfileMatrix from CSV or from evaluation report JSON.

    CSV: first column holds index ids, the header names the settings;
    ``inf`` cells are divergence sentinels. JSON: a report written by the
    ``evaluate`` command, or a list of such reports (one column per
    candidate).
    """
    if isinstance(path, (str, Path)) and str(path).lower().endswith(".json"):
        from .reporting import profile_from_report_json

        with open(path, encoding="utf-8") as handle:
            return profile_from_report_json(json.load(handle))

    frame = _read_frame(path)
    if frame.shape[1] < 2:
        raise ParseError("Profile CSV needs an id column and at least one value column")
    id_column, value_columns = frame.columns[0], list(frame.columns[1:])
    values = _parse_numeric(frame, value_columns)
    row_ids = tuple(_row_id(str(raw).strip()) for raw in frame[id_column])
    return IndexProfileMatrix(values, row_ids, tuple(value_columns))

