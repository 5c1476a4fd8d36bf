"""Deterministic record emission.

Records are JSON objects with floats printed at 17 significant digits so
that identical inputs yield byte-identical output; every emitted record
re-parses with ``json.loads`` (infinities use the Infinity token).
"""

from __future__ import annotations

import numpy as np


def format_float(x: float) -> str:
    x = float(x)
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def _render(node) -> str:
    if node is None:
        return "null"
    if isinstance(node, (bool, np.bool_)):
        return "true" if node else "false"
    if isinstance(node, (int, np.integer)):
        return str(int(node))
    if isinstance(node, (float, np.floating)):
        return format_float(float(node))
    if isinstance(node, str):
        import json

        return json.dumps(node)
    if isinstance(node, np.ndarray):
        return _render(node.tolist())
    if isinstance(node, (list, tuple)):
        return "[" + ", ".join(_render(x) for x in node) + "]"
    if isinstance(node, dict):
        items = ", ".join(f"{_render(str(k))}: {_render(v)}" for k, v in node.items())
        return "{" + items + "}"
    raise TypeError(f"cannot serialize {type(node)!r}")


def render_record(record: dict) -> str:
    """One record, one line."""
    return _render(record)


def matrix_literal(mat: np.ndarray) -> list:
    """Encode an ndarray in the shared [re, im] matrix literal format."""
    mat = np.asarray(mat, dtype=complex)
    return [[[float(ent.real), float(ent.imag)] for ent in row] for row in mat]


def write_delimited(path, header: list[str], rows) -> None:
    """Tab-separated table with 17-significant-digit floats."""
    lines = ["\t".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(format_float(float(cell)))
            else:
                cells.append(str(cell))
        lines.append("\t".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
