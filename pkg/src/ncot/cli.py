"""Command-line interface.

Commands: dist, geodesic, heat, entropy, curvature, disintegrate, check.
Structured records go to standard output (floats at 17 significant
digits, byte-identical for identical inputs); ``--out`` additionally
writes a tab-delimited results file with a rendered PNG figure next to
it.  Exit codes: 0 success, 1 input/config error, 2 infeasible or
infinite distance, 3 solver non-convergence (record still emitted).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bundle import disintegrated_distance, mean_curvature_check, mean_entropy
from .checks import run_suites
from .entropy import entropy, entropy_dissipation, estimate_curvature
from .errors import NcotError, ParseError, SingularityError, UsageError
from .problem import AlgebraProblem, BundleProblem, load_problem
from .records import format_float, render_record, write_delimited

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NO_CONVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise ParseError(message)


def _add_common(sub: argparse.ArgumentParser, needs_file: bool = True) -> None:
    if needs_file:
        sub.add_argument("problem", help="problem file (JSON)")
    sub.add_argument("--steps", type=int, default=None, help="time discretization steps")
    sub.add_argument("--tol", type=float, default=None, help="relative energy decrease tolerance")
    sub.add_argument("--max-iters", type=int, default=None, help="iteration cap")
    sub.add_argument("--seed", type=int, default=None, help="seed for sampling commands")
    sub.add_argument("--jobs", type=int, default=1, help="cap on fiber-level concurrency")
    sub.add_argument("--out", type=Path, default=None, help="results file (TSV; figure rendered next to it)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncot", description="noncommutative optimal transport on matrix algebras")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn, extra in (
        ("dist", cmd_dist, None),
        ("geodesic", cmd_geodesic, None),
        ("heat", cmd_heat, "heat"),
        ("entropy", cmd_entropy, None),
        ("curvature", cmd_curvature, "curvature"),
        ("disintegrate", cmd_disintegrate, None),
    ):
        sub = subs.add_parser(name)
        _add_common(sub)
        if extra == "heat":
            sub.add_argument("--t-max", type=float, default=None, help="heat grid endpoint")
            sub.add_argument("--t-points", type=int, default=None, help="heat grid size")
        if extra == "curvature":
            sub.add_argument("--samples", type=int, default=None, help="sampled pair count")
        sub.set_defaults(func=fn)
    check = subs.add_parser("check")
    check.add_argument("suite", help="spectral | derivation | entropy | transport | bundle | all")
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_check)
    return parser


def _overrides(args) -> dict:
    return {
        "steps": args.steps,
        "tol": args.tol,
        "max_iters": getattr(args, "max_iters", None),
        "seed": args.seed,
    }


def _emit(record: dict) -> None:
    sys.stdout.write(render_record(record) + "\n")


def _load(args, want: type | None = None):
    problem = load_problem(args.problem, overrides=_overrides(args))
    if want is not None and not isinstance(problem, want):
        kind = "algebra" if want is AlgebraProblem else "bundle"
        raise ParseError(f"this command requires a problem of kind '{kind}'")
    return problem


def _require_densities(problem, *names):
    for name in names:
        if getattr(problem, name) is None:
            raise ParseError(f"missing required field '{name.upper() if isinstance(problem, BundleProblem) else name}'")


def _solve_exit(result) -> int:
    if not result.feasible:
        return EXIT_INFEASIBLE
    if not result.converged:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_dist(args) -> int:
    problem = _load(args, AlgebraProblem)
    _require_densities(problem, "p", "q")
    from .transport import solve_geodesic

    result = solve_geodesic(problem.derivation, problem.p, problem.q, problem.solver)
    _emit(
        {
            "command": "dist",
            "n": problem.derivation.n,
            "steps": problem.solver.steps,
            "distance": result.distance,
            "energy": result.energy,
            "iterations": result.iterations,
            "converged": result.converged,
            "infeasible_component_norm": result.infeasible_component_norm,
        }
    )
    return _solve_exit(result)


def cmd_geodesic(args) -> int:
    problem = _load(args, AlgebraProblem)
    _require_densities(problem, "p", "q")
    from .transport import solve_geodesic

    result = solve_geodesic(problem.derivation, problem.p, problem.q, problem.solver)
    record = {
        "command": "geodesic",
        "n": problem.derivation.n,
        "steps": problem.solver.steps,
        "distance": result.distance,
        "energy": result.energy,
        "iterations": result.iterations,
        "converged": result.converged,
        "infeasible_component_norm": result.infeasible_component_norm,
        "step_energies": list(result.path.step_energies) if result.path else [],
    }
    _emit(record)
    if args.out is not None and result.path is not None:
        path = result.path
        times = path.times
        dens = path.density_matrices()
        n = problem.derivation.n
        header = ["t", "step_energy"]
        header += [f"rho_{i}_{j}_{part}" for i in range(n) for j in range(n) for part in ("re", "im")]
        rows = []
        for idx, t in enumerate(times):
            e = np.nan if idx == 0 else float(path.step_energies[idx - 1])
            row = [float(t), e]
            for i in range(n):
                for j in range(n):
                    row += [float(dens[idx][i, j].real), float(dens[idx][i, j].imag)]
            rows.append(row)
        write_delimited(args.out, header, rows)
        from .figures import geodesic_figure

        tracks = np.stack([np.linalg.eigvalsh(mat) for mat in dens])
        geodesic_figure(times, tracks, path.step_energies, args.out.with_suffix(".png"))
    return _solve_exit(result)


def cmd_heat(args) -> int:
    problem = _load(args, AlgebraProblem)
    _require_densities(problem, "p")
    grid = problem.heat_grid
    if args.t_max is not None or args.t_points is not None:
        t_max = args.t_max if args.t_max is not None else float(grid[-1])
        pts = args.t_points if args.t_points is not None else len(grid)
        if pts < 2:
            raise ParseError("--t-points must be >= 2")
        grid = np.linspace(0.0, t_max, pts)
    d = problem.derivation
    rows = []
    for t in grid:
        rho = d.heat(problem.p, float(t))
        ent = entropy(rho)
        try:
            diss = entropy_dissipation(d, rho.mat)
        except SingularityError:
            diss = np.nan
        rows.append((float(t), ent, diss))
    _emit(
        {
            "command": "heat",
            "n": d.n,
            "t": [r[0] for r in rows],
            "entropy": [r[1] for r in rows],
            "dissipation": [r[2] for r in rows],
        }
    )
    if args.out is not None:
        write_delimited(args.out, ["t", "entropy", "dissipation"], rows)
        from .figures import heat_figure

        heat_figure([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], args.out.with_suffix(".png"))
    return EXIT_OK


def cmd_entropy(args) -> int:
    problem = _load(args)
    if isinstance(problem, AlgebraProblem):
        _require_densities(problem, "p")
        _emit({"command": "entropy", "n": problem.derivation.n, "entropy": entropy(problem.p)})
    else:
        if problem.p is None:
            raise ParseError("missing required field 'P'")
        _emit(
            {
                "command": "entropy",
                "kind": "bundle",
                "mean_entropy": mean_entropy(problem.base, problem.p),
            }
        )
    return EXIT_OK


def cmd_curvature(args) -> int:
    problem = _load(args)
    samples = args.samples if args.samples is not None else problem.curvature_samples
    seed = args.seed if args.seed is not None else problem.curvature_seed
    if isinstance(problem, AlgebraProblem):
        report = estimate_curvature(problem.derivation, samples, seed, problem.solver)
        record = {"command": "curvature", "kind": "algebra"}
        record.update(report.record())
        record["note"] = (
            "estimate uses solver minimizers; with non-unique minimizers the certifying one may differ"
        )
        _emit(record)
        if args.out is not None:
            rows = []
            for idx, gap in enumerate(report.pair_gaps):
                rows.append((idx, "skipped" if gap is None else "ok", np.nan if gap is None else gap))
            write_delimited(args.out, ["pair", "status", "gap"], rows)
            from .figures import curvature_figure

            pts = [(i, g) for i, g in enumerate(report.pair_gaps) if g is not None]
            curvature_figure(
                [p[0] for p in pts], [p[1] for p in pts], report.estimate, args.out.with_suffix(".png")
            )
    else:
        report = mean_curvature_check(problem.vertical, samples, seed, problem.solver)
        record = {"command": "curvature", "kind": "bundle"}
        record.update(report.record())
        _emit(record)
        if args.out is not None:
            rows = [(j, est) for j, est in enumerate(report.fiber_estimates)]
            write_delimited(args.out, ["fiber", "curvature_estimate"], rows)
    return EXIT_OK


def cmd_disintegrate(args) -> int:
    problem = _load(args, BundleProblem)
    if problem.p is None or problem.q is None:
        raise ParseError("missing required field 'P' or 'Q'")
    result = disintegrated_distance(problem.vertical, problem.p, problem.q, problem.solver, jobs=max(args.jobs, 1))
    _emit(
        {
            "command": "disintegrate",
            "K": problem.base.size,
            "n": problem.vertical.n,
            "total_sq": result.total_sq,
            "distance": result.distance,
            "mass_mismatch": result.mass_mismatch,
            "converged": result.converged,
            "per_fiber_w2": [r.w2 for r in result.per_fiber],
            "per_fiber_feasible": [r.feasible for r in result.per_fiber],
        }
    )
    if args.out is not None:
        rows = [
            (r.index, r.weight, r.mass, r.w2, r.weight * r.mass * (r.w2 ** 2 if np.isfinite(r.w2) else np.inf), r.feasible)
            for r in result.per_fiber
        ]
        write_delimited(args.out, ["fiber", "weight", "mass", "w2", "weighted_sq", "feasible"], rows)
        from .figures import disintegration_figure

        if result.feasible:
            contributions = [r.weight * r.mass * r.w2 ** 2 for r in result.per_fiber]
            labels = [str(r.index) for r in result.per_fiber]
            disintegration_figure(labels, contributions, args.out.with_suffix(".png"))
    if not result.feasible:
        return EXIT_INFEASIBLE
    if not result.converged:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_suites(args.suite, args.seed)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failed += 0 if r.passed else 1
        sys.stdout.write(
            f"[{r.suite}] {r.name:<32} residual {format_float(r.residual):>24}"
            f"  tol {format_float(r.tolerance):>12}  {status}\n"
        )
    sys.stdout.write(f"[{args.suite}] {len(results)} checks, {len(results) - failed} passed, {failed} failed\n")
    return EXIT_OK if failed == 0 else EXIT_INPUT


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except (ParseError, UsageError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NcotError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
