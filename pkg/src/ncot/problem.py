"""Problem-file ingestion.

One self-describing JSON format with a "kind" field ("algebra" or
"bundle").  Matrices are arrays of rows whose entries are two-element
[re, im] arrays of decimal floats; densities may instead be given as
{"diag": [..]} and are normalized on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle import FiberedDensity, FiniteBase, VerticalGradient
from .derivation import Derivation
from .errors import ParseError
from .spectral import DensityMatrix
from .transport import SolverConfig


def parse_matrix(node, *, field: str) -> np.ndarray:
    """Decode the shared matrix literal format (or a {"diag": [..]} shorthand)."""
    if isinstance(node, dict):
        if "diag" not in node:
            raise ParseError(f"field '{field}': matrix object must carry a 'diag' key")
        diag = node["diag"]
        if not isinstance(diag, list) or not diag:
            raise ParseError(f"field '{field}': 'diag' must be a nonempty list")
        try:
            return np.diag([float(x) for x in diag]).astype(complex)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"field '{field}': non-numeric diagonal entry ({exc})") from exc
    if not isinstance(node, list) or not node:
        raise ParseError(f"field '{field}': matrix must be a nonempty array of rows")
    n = len(node)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"field '{field}': row {i} must be a list of {n} entries")
        for j, ent in enumerate(row):
            if not isinstance(ent, list) or len(ent) != 2:
                raise ParseError(f"field '{field}': entry ({i},{j}) must be a [re, im] pair")
            try:
                out[i, j] = complex(float(ent[0]), float(ent[1]))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"field '{field}': non-numeric entry at ({i},{j})") from exc
    return out


def _require(node: dict, key: str, where: str):
    if key not in node:
        raise ParseError(f"missing required field '{key}' in {where}")
    return node[key]


def parse_derivation(node, *, where: str) -> Derivation:
    if not isinstance(node, dict):
        raise ParseError(f"{where} must be an object with a 'generators' field")
    gens = _require(node, "generators", where)
    if not isinstance(gens, list):
        raise ParseError(f"field 'generators' in {where} must be a list of matrices")
    mats = [parse_matrix(g, field=f"{where}.generators[{i}]") for i, g in enumerate(gens)]
    n = node.get("n")
    if not mats and n is None:
        raise ParseError(f"{where}: empty 'generators' requires an explicit 'n'")
    return Derivation(mats, n=int(n) if n is not None else None)


def parse_solver_config(node, overrides: dict | None = None) -> SolverConfig:
    node = node or {}
    if not isinstance(node, dict):
        raise ParseError("field 'solver' must be an object")
    known = {"steps", "tol", "max_iters", "patience", "feas_tol", "seed", "restarts"}
    unknown = set(node) - known
    if unknown:
        raise ParseError(f"unknown solver field(s): {sorted(unknown)}")
    merged = dict(node)
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val
    try:
        return SolverConfig(
            steps=int(merged.get("steps", 16)),
            tol=float(merged.get("tol", 1e-8)),
            max_iters=int(merged.get("max_iters", 5000)),
            patience=int(merged.get("patience", 20)),
            feas_tol=float(merged.get("feas_tol", 1e-8)),
            seed=int(merged.get("seed", 0)),
            restarts=int(merged.get("restarts", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid solver configuration: {exc}") from exc


@dataclass
class AlgebraProblem:
    derivation: Derivation
    p: DensityMatrix | None
    q: DensityMatrix | None
    solver: SolverConfig
    heat_grid: np.ndarray
    curvature_samples: int
    curvature_seed: int


@dataclass
class BundleProblem:
    base: FiniteBase
    vertical: VerticalGradient
    p: FiberedDensity | None
    q: FiberedDensity | None
    solver: SolverConfig
    curvature_samples: int
    curvature_seed: int


def load_problem(path, overrides: dict | None = None):
    """Parse a problem file into an AlgebraProblem or BundleProblem."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    kind = _require(doc, "kind", "problem file")
    if kind == "algebra":
        return _load_algebra(doc, overrides)
    if kind == "bundle":
        return _load_bundle(doc, overrides)
    raise ParseError(f"field 'kind' must be 'algebra' or 'bundle', got {kind!r}")


def _curvature_params(doc: dict) -> tuple[int, int]:
    node = doc.get("curvature", {})
    if not isinstance(node, dict):
        raise ParseError("field 'curvature' must be an object")
    return int(node.get("sample_count", 8)), int(node.get("seed", 0))


def _load_algebra(doc: dict, overrides: dict | None) -> AlgebraProblem:
    deriv = parse_derivation(doc, where="problem file")
    p = doc.get("p")
    q = doc.get("q")
    pd = DensityMatrix(parse_matrix(p, field="p")) if p is not None else None
    qd = DensityMatrix(parse_matrix(q, field="q")) if q is not None else None
    heat = doc.get("heat", {})
    if not isinstance(heat, dict):
        raise ParseError("field 'heat' must be an object")
    if "t_grid" in heat:
        grid = np.asarray([float(x) for x in heat["t_grid"]], dtype=float)
    else:
        t_max = float(heat.get("t_max", 1.0))
        samples = int(heat.get("samples", 21))
        if samples < 2:
            raise ParseError("field 'heat.samples' must be >= 2")
        grid = np.linspace(0.0, t_max, samples)
    samples_c, seed_c = _curvature_params(doc)
    return AlgebraProblem(
        derivation=deriv,
        p=pd,
        q=qd,
        solver=parse_solver_config(doc.get("solver"), overrides),
        heat_grid=grid,
        curvature_samples=samples_c,
        curvature_seed=seed_c,
    )


def _load_bundle(doc: dict, overrides: dict | None) -> BundleProblem:
    base_node = _require(doc, "base", "bundle problem")
    if not isinstance(base_node, dict):
        raise ParseError("field 'base' must be an object")
    weights = _require(base_node, "weights", "'base'")
    if not isinstance(weights, list) or not weights:
        raise ParseError("field 'base.weights' must be a nonempty list")
    base = FiniteBase(weights=tuple(float(w) for w in weights))
    fibers_node = _require(doc, "fibers", "bundle problem")
    if not isinstance(fibers_node, list) or len(fibers_node) != base.size:
        raise ParseError(f"field 'fibers' must list {base.size} derivation blocks")
    fibers = tuple(
        parse_derivation(node, where=f"fibers[{j}]") for j, node in enumerate(fibers_node)
    )
    vertical = VerticalGradient(base, fibers)

    def fibered(key: str) -> FiberedDensity | None:
        node = doc.get(key)
        if node is None:
            return None
        if not isinstance(node, list) or len(node) != base.size:
            raise ParseError(f"field '{key}' must list {base.size} fiber matrices")
        mats = [parse_matrix(mn, field=f"{key}[{j}]") for j, mn in enumerate(node)]
        return FiberedDensity(base, mats, normalize=True)

    samples_c, seed_c = _curvature_params(doc)
    return BundleProblem(
        base=base,
        vertical=vertical,
        p=fibered("P"),
        q=fibered("Q"),
        solver=parse_solver_config(doc.get("solver"), overrides),
        curvature_samples=samples_c,
        curvature_seed=seed_c,
    )
