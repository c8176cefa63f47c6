"""CSV and JSON serialization of matrix samples and reports.

CSV rows hold vech coordinates (upper triangle, row-major) under a header
``<prefix>_i_j`` with 1-based indices.  Floats are written in shortest
round-trip form, with ``\\n`` line endings, so files are byte-reproducible.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import spd
from .errors import InvalidInputError

SCHEMA_VERSION = 1


def vech_header(r: int, prefix: str = "m") -> list[str]:
    i, j = np.triu_indices(r)
    return [f"{prefix}_{a + 1}_{b + 1}" for a, b in zip(i, j)]


def _fmt(x: float) -> str:
    return repr(float(x))


def matrices_to_csv(blocks: list[tuple[str, np.ndarray]]) -> str:
    """Render batches of matrices side by side, one CSV row per draw.

    ``blocks`` is a list of ``(prefix, array of shape (n, r, r))``.
    """
    n = blocks[0][1].shape[0]
    header, cols = [], []
    for prefix, mats in blocks:
        if mats.shape[0] != n:
            raise InvalidInputError("all blocks need the same number of rows")
        header += vech_header(mats.shape[-1], prefix)
        cols.append(spd.vech(mats))
    table = np.hstack(cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in table:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def parse_csv_table(text: str) -> tuple[list[str] | None, np.ndarray]:
    """Numeric table from CSV text; a non-numeric first row is taken as header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidInputError("empty CSV input")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    if not rows:
        raise InvalidInputError("CSV has a header but no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InvalidInputError("CSV rows have unequal lengths")
    try:
        table = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InvalidInputError(f"non-numeric CSV entry: {exc}") from None
    if not np.all(np.isfinite(table)):
        raise InvalidInputError("CSV contains non-finite values")
    return header, table


def table_to_matrices(table: np.ndarray, n_blocks: int) -> list[np.ndarray]:
    """Split a table into ``n_blocks`` equal-width vech blocks of matrices."""
    width = table.shape[1]
    if width % n_blocks:
        raise InvalidInputError(f"{width} columns cannot split into {n_blocks} vech blocks")
    d = width // n_blocks
    r = spd.rank_from_dim(d)
    return [spd.unvech(table[:, k * d:(k + 1) * d], r) for k in range(n_blocks)]


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")
