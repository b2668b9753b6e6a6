"""Read and write correlation matrices as CSV (plain rows) or JSON ``{"rho": [[...]]}``.

Values are written with 17 significant digits, which round-trips every
float64 exactly.
"""

import hashlib
import io
import json
from pathlib import Path

import numpy as np

FORMATS = ("csv", "json")


def _format_of(path, fmt):
    if fmt is not None:
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
        return fmt
    return "json" if Path(path).suffix.lower() == ".json" else "csv"


def _square(rows):
    a = np.array(rows, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    return a


def parse_csv(text):
    rows = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(tok) for tok in line.replace(";", ",").split(",") if tok.strip()])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError("CSV rows have unequal lengths")
    return _square(rows)


def parse_json(text):
    doc = json.loads(text)
    if not isinstance(doc, dict) or "rho" not in doc:
        raise ValueError('JSON matrix file must be an object with a "rho" field')
    return _square(doc["rho"])


def read_matrix(path, fmt=None):
    """Raw square array from a file; validation is left to the caller."""
    text = Path(path).read_text()
    if _format_of(path, fmt) == "json":
        return parse_json(text)
    return parse_csv(text)


def format_csv(matrix):
    a = np.asarray(matrix, dtype=float)
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in a)


def format_json(matrix):
    a = np.asarray(matrix, dtype=float)
    rows = ",\n  ".join("[" + ", ".join(f"{v:.17g}" for v in row) + "]" for row in a)
    return '{"rho": [\n  ' + rows + "\n]}\n"


def write_matrix(path, matrix, fmt=None):
    text = format_json(matrix) if _format_of(path, fmt) == "json" else format_csv(matrix)
    Path(path).write_text(text)


def matrix_digest(matrix):
    """SHA-256 of the float64 little-endian bytes of the matrix."""
    a = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    return hashlib.sha256(a.tobytes()).hexdigest()
