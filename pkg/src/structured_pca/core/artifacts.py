"""
File formats for masks, constraint matrices, data sets and JSON documents.

- Mask: one line per row, space-separated 0/1 tokens, ``#`` starts a comment.
- Constraint matrix: CSV, m rows by n columns, no header.
- Data: CSV with header ``v1,...,vn``, one sample per row (transposed from
  the internal n x N layout).

Numbers are written with 17 significant digits so re-reading is lossless.
"""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from structured_pca.core.matops import Mat, as_matrix
from structured_pca.core.models import FaultReport
from structured_pca.core.structure import StructureMask
from structured_pca.utils.exceptions import ArtifactError, MatrixError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def read_mask(path: Path) -> StructureMask:
    """
    Load a structure mask.

    Raises:
        ArtifactError: If the file is missing or holds tokens other than 0/1
        InvalidMask: If the pattern violates mask invariants
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ArtifactError(f"cannot read mask file {path}: {e}") from e

    rows: list[list[bool]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.replace(",", " ").split()
        if any(t not in ("0", "1") for t in tokens):
            raise ArtifactError(f"{path}:{lineno}: mask tokens must be 0 or 1")
        rows.append([t == "1" for t in tokens])

    if not rows:
        raise ArtifactError(f"mask file {path} has no rows")
    if len({len(r) for r in rows}) != 1:
        raise ArtifactError(f"mask file {path} has rows of different lengths")
    return StructureMask(rows)


def write_mask(path: Path, mask: StructureMask, comment: str | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {comment}"] if comment else []
    lines += [" ".join("1" if v else "0" for v in row) for row in mask.mask]
    path.write_text("\n".join(lines) + "\n")
    logger.debug(f"Mask written to: {path}")


def _load_csv(path: Path, skiprows: int) -> Mat:
    try:
        arr = np.loadtxt(path, delimiter=",", skiprows=skiprows, ndmin=2)
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise ArtifactError(f"malformed CSV {path}: {e}") from e
    try:
        return as_matrix(arr, str(path))
    except MatrixError as e:
        raise ArtifactError(str(e)) from e


def read_matrix(path: Path) -> Mat:
    """Load a header-less numeric CSV."""
    return _load_csv(Path(path), skiprows=0)


def write_matrix(path: Path, a: ArrayLike) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, as_matrix(a), delimiter=",", fmt=FLOAT_FORMAT)
    logger.debug(f"Matrix written to: {path}")


def read_data(path: Path) -> Mat:
    """
    Load a data CSV and return it as n x N (one column per sample).

    Raises:
        ArtifactError: If the header is not ``v1,...,vn`` or a value is malformed
    """
    path = Path(path)
    try:
        with open(path) as f:
            header = f.readline().strip()
    except OSError as e:
        raise ArtifactError(f"cannot read data file {path}: {e}") from e

    names = header.split(",")
    if names != [f"v{j}" for j in range(1, len(names) + 1)]:
        raise ArtifactError(f"data file {path} header must be v1,...,vn, got {header!r}")
    data = _load_csv(path, skiprows=1)
    if data.shape[1] != len(names):
        raise ArtifactError(f"data file {path} has {data.shape[1]} columns for {len(names)} names")
    return data.T.copy()


def write_data(path: Path, y: ArrayLike) -> None:
    """Write n x N data as N rows of n values."""
    data = as_matrix(y, "data")
    header = ",".join(f"v{j}" for j in range(1, data.shape[0] + 1))
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data.T, delimiter=",", fmt=FLOAT_FORMAT, header=header, comments="")
    logger.debug(f"Data written to: {path}")


def write_flags(path: Path, reports: dict[str, FaultReport]) -> None:
    """Per-sample 0/1 flags, one column per source."""
    names = list(reports)
    flags = np.column_stack([reports[name].flags.astype(int) for name in names])
    samples = np.arange(flags.shape[0])[:, None]
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        path,
        np.hstack([samples, flags]),
        delimiter=",",
        fmt="%d",
        header=",".join(["sample", *names]),
        comments="",
    )
    logger.debug(f"Flags written to: {path}")


def save_json(path: Path, document: dict[str, Any]) -> None:
    """
    Save a JSON document.

    Raises:
        ArtifactError: If the file cannot be written
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(document, f, indent=2)
            f.write("\n")
        logger.info(f"JSON written to: {path}")
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise ArtifactError(f"cannot write {path}: {e}") from e


def load_json(path: Path) -> dict[str, Any] | None:
    """
    Load a JSON document.

    Returns:
        The document, or None if the file doesn't exist

    Raises:
        ArtifactError: If the file is unreadable or not valid JSON
    """
    if not path.exists():
        logger.debug(f"JSON file not found: {path}")
        return None
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {path}: {e}")
        raise ArtifactError(f"invalid JSON in {path}: {e}") from e
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
