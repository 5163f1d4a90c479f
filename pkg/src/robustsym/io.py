"""
JSON matrix files and report serialization.

Matrix file::

    {"dim": 2, "entries": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}

Each entry is a ``[re, im]`` pair. Vectors use the same layout with a flat
list of pairs. Floats are written with ``repr`` so a write/read round trip
is exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .numkernel import op_norm

__all__ = [
    "MatrixFileError",
    "parse_matrix",
    "read_matrix",
    "write_matrix",
    "matrix_to_json",
    "read_vector",
    "file_digest",
    "to_jsonable",
    "dump_report",
]


class MatrixFileError(ValueError):
    def __init__(self, message: str, path=None, row: int | None = None, col: int | None = None):
        self.path, self.row, self.col = path, row, col
        where = ""
        if row is not None:
            where = f" at row {row}" + (f", column {col}" if col is not None else "")
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}{message}{where}")


def _number(x, path, row, col) -> complex:
    if (not isinstance(x, (list, tuple)) or len(x) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)):
        raise MatrixFileError("entry must be a [re, im] pair of numbers", path, row, col)
    z = complex(float(x[0]), float(x[1]))
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise MatrixFileError("non-finite entry", path, row, col)
    return z


def parse_matrix(doc, path=None, hermitian: bool = False) -> np.ndarray:
    if not isinstance(doc, dict) or "entries" not in doc:
        raise MatrixFileError("expected an object with 'dim' and 'entries'", path)
    rows = doc["entries"]
    dim = doc.get("dim", len(rows) if isinstance(rows, list) else None)
    if not isinstance(dim, int) or dim <= 0:
        raise MatrixFileError("'dim' must be a positive integer", path)
    if not isinstance(rows, list) or len(rows) != dim:
        raise MatrixFileError(f"expected {dim} rows", path)
    M = np.empty((dim, dim), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise MatrixFileError(f"expected {dim} entries", path, i)
        for j, x in enumerate(row):
            M[i, j] = _number(x, path, i, j)
    if hermitian:
        D = np.abs(M - M.conj().T)
        if np.linalg.norm(M - M.conj().T) > 1e-12 * (1.0 + np.linalg.norm(M)):
            i, j = np.unravel_index(int(np.argmax(D)), D.shape)
            raise MatrixFileError(
                f"matrix is not Hermitian (|A_ij - conj(A_ji)| = {D[i, j]:.3e})", path, int(i), int(j)
            )
    return M


def read_matrix(path, hermitian: bool = False) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MatrixFileError(f"invalid JSON: {exc.msg}", path, exc.lineno - 1, exc.colno - 1) from exc
    except OSError as exc:
        raise MatrixFileError(f"cannot read file: {exc.strerror}", path) from exc
    return parse_matrix(doc, path, hermitian)


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=np.complex128)
    return {"dim": int(M.shape[0]),
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in M]}


def write_matrix(path, M) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(M)) + "\n")


def read_vector(path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MatrixFileError(f"cannot read vector: {exc}", path) from exc
    entries = doc.get("entries") if isinstance(doc, dict) else None
    if not isinstance(entries, list) or not entries:
        raise MatrixFileError("expected an object with 'entries'", path)
    return np.array([_number(x, path, i, None) for i, x in enumerate(entries)])


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def to_jsonable(obj):
    """Convert numpy scalars/arrays and complex numbers for ``json``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True)


def norm_summary(M) -> dict:
    return {"frobenius": float(np.linalg.norm(M)), "operator": op_norm(M)}
