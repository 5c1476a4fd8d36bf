"""Matrix-algebra bundles over a finite measured base.

Densities are fibered positive matrices P(x_j) with weighted total trace
one; the transport distance between two such objects decomposes into a
weighted sum of per-fiber distances after normalizing each fiber by its
mass.  Feasibility requires equal fiber-mass vectors; otherwise the
distance is infinite.  A joint block solve on the product algebra serves
as an independent verification route of the same quantity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .entropy import ENTROPY_EIGENVALUE_FLOOR, estimate_curvature
from .errors import DimensionMismatchError, UsageError
from .sampling import density_pair
from .spectral import hermitize
from .transport import SolverConfig, TransportPath, solve_block_geodesic, solve_geodesic

MASS_MATCH_TOL = 1e-8
ZERO_MASS_TOL = 1e-12


@dataclass(frozen=True)
class FiniteBase:
    """Finitely many points with strictly positive weights."""

    weights: tuple
    points: tuple = ()

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w or any(x <= 0 for x in w):
            raise UsageError("base weights must be strictly positive")
        pts = tuple(self.points) if self.points else tuple(f"x{j + 1}" for j in range(len(w)))
        if len(pts) != len(w):
            raise DimensionMismatchError("points and weights differ in length")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return len(self.weights)


class FiberedDensity:
    """Positive matrices over the base with sum_j nu_j tr P(x_j) = 1."""

    __slots__ = ("base", "fibers", "n")

    def __init__(self, base: FiniteBase, fibers, normalize: bool = True):
        mats = [hermitize(np.asarray(f, dtype=complex)) for f in fibers]
        if len(mats) != base.size:
            raise DimensionMismatchError(f"expected {base.size} fibers, got {len(mats)}")
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise DimensionMismatchError(f"fibers have mixed dimensions {sorted(dims)}")
        clean = []
        for m in mats:
            w, u = np.linalg.eigh(m)
            if w.size and w[0] >= 0.0:
                clean.append(m)  # already positive; keep entries bit-stable
                continue
            w = np.clip(w, 0.0, None)
            clean.append(hermitize((u * w) @ u.conj().T))
        total = sum(wj * float(np.trace(f).real) for wj, f in zip(base.weights, clean))
        if normalize:
            if total <= 0:
                raise UsageError("fibered density must have positive total mass")
            clean = [f / total for f in clean]
        self.base = base
        self.fibers = clean
        self.n = clean[0].shape[0]

    def __repr__(self):
        return f"FiberedDensity(K={self.base.size}, n={self.n})"


@dataclass(frozen=True)
class VerticalGradient:
    """A derivation per fiber, with common matrix dimension and arity."""

    base: FiniteBase
    per_fiber: tuple

    def __post_init__(self):
        fibers = tuple(self.per_fiber)
        if len(fibers) != self.base.size:
            raise DimensionMismatchError("need one derivation per base point")
        if len({d.n for d in fibers}) != 1:
            raise DimensionMismatchError("fiber derivations have mixed dimensions")
        if len({d.m for d in fibers}) != 1:
            raise DimensionMismatchError("fiber derivations must share the generator count")
        object.__setattr__(self, "per_fiber", fibers)

    @property
    def n(self) -> int:
        return self.per_fiber[0].n


def product_trace(base: FiniteBase, section) -> float:
    """Weighted total trace sum_j nu_j tr F(x_j) of a matrix section."""
    mats = [np.asarray(f, dtype=complex) for f in section]
    if len(mats) != base.size:
        raise DimensionMismatchError(f"expected {base.size} fibers, got {len(mats)}")
    if len({m.shape for m in mats}) != 1:
        raise DimensionMismatchError("section fibers have mixed dimensions")
    return float(sum(w * np.trace(f).real for w, f in zip(base.weights, mats)))


def fiber_masses(p: FiberedDensity) -> np.ndarray:
    """Per-fiber traces tr P(x_j) (unweighted)."""
    return np.array([float(np.trace(f).real) for f in p.fibers])


@dataclass(frozen=True)
class FiberRecord:
    index: int
    weight: float
    mass: float
    w2: float
    feasible: bool
    path: TransportPath | None
    converged: bool = True


@dataclass(frozen=True)
class DisintegrationResult:
    """Weighted decomposition of the squared bundle distance."""

    total_sq: float
    per_fiber: tuple
    mass_mismatch: float
    converged: bool

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.total_sq)

    @property
    def distance(self) -> float:
        return float(np.sqrt(self.total_sq)) if self.feasible else np.inf


@dataclass(frozen=True)
class AssembledPath:
    """Global minimizer assembled from rescaled fiber paths."""

    base: FiniteBase
    steps: int
    sections: tuple  # one FiberedDensity per grid time
    step_energies: np.ndarray

    @property
    def energy(self) -> float:
        return float(self.step_energies.sum())


def disintegrated_distance(
    vg: VerticalGradient, p: FiberedDensity, q: FiberedDensity, config: SolverConfig | None = None,
    jobs: int = 1,
) -> DisintegrationResult:
    """Squared distance as the mass-weighted sum of normalized fiber solves.

    Fibers with mass below threshold contribute zero; a fiber-mass
    mismatch or any fiber-level infeasibility yields the infinity flag.
    """
    cfg = config or SolverConfig()
    _check_bundle_compat(vg, p, q)
    masses_p = fiber_masses(p)
    masses_q = fiber_masses(q)
    mismatch = float(np.max(np.abs(masses_p - masses_q)))
    if mismatch > MASS_MATCH_TOL:
        records = tuple(
            FiberRecord(j, vg.base.weights[j], masses_p[j], np.inf, False, None)
            for j in range(vg.base.size)
        )
        return DisintegrationResult(np.inf, records, mismatch, True)

    def solve_fiber(j: int) -> FiberRecord:
        mass = masses_p[j]
        if mass <= ZERO_MASS_TOL:
            return FiberRecord(j, vg.base.weights[j], mass, 0.0, True, None, True)
        # exact no-op when the fiber is already normalized (K=1 reduction is bitwise)
        theta_sq = 1.0 if abs(mass - 1.0) <= 64 * np.finfo(float).eps else 1.0 / mass
        res = solve_geodesic(vg.per_fiber[j], theta_sq * p.fibers[j], theta_sq * q.fibers[j], cfg)
        return FiberRecord(j, vg.base.weights[j], mass, res.distance, res.feasible, res.path, res.converged)

    indices = range(vg.base.size)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = tuple(pool.map(solve_fiber, indices))
    else:
        records = tuple(solve_fiber(j) for j in indices)
    if not all(r.feasible for r in records):
        return DisintegrationResult(np.inf, records, mismatch, True)
    total = sum(r.weight * r.mass * r.w2 ** 2 for r in records if r.mass > ZERO_MASS_TOL)
    return DisintegrationResult(float(total), records, mismatch, all(r.converged for r in records))


def _check_bundle_compat(vg: VerticalGradient, p: FiberedDensity, q: FiberedDensity) -> None:
    if p.base.size != vg.base.size or q.base.size != vg.base.size:
        raise DimensionMismatchError("base sizes differ")
    if p.n != vg.n or q.n != vg.n:
        raise DimensionMismatchError("fiber dimensions differ from the vertical gradient")


def assemble_global_path(result: DisintegrationResult, p: FiberedDensity) -> AssembledPath:
    """Rescale fiber minimizers by their masses into one global path.

    The assembled energy (weighted sum of fiber energies) equals the
    squared distance of the result by construction.
    """
    if not result.feasible:
        raise UsageError("cannot assemble a path from an infeasible result")
    steps = None
    for r in result.per_fiber:
        if r.path is not None:
            steps = r.path.steps
            break
    if steps is None:
        steps = SolverConfig().steps
    n = p.n
    sections = []
    for t_idx in range(steps + 1):
        fibers = []
        for r in result.per_fiber:
            if r.path is None or r.mass <= ZERO_MASS_TOL:
                fibers.append(np.zeros((n, n), dtype=complex) if r.mass <= ZERO_MASS_TOL else p.fibers[r.index])
            else:
                fibers.append(r.mass * r.path.density_matrices()[t_idx])
        sections.append(FiberedDensity(p.base, fibers, normalize=False))
    step_energies = np.zeros(steps)
    for r in result.per_fiber:
        if r.path is not None and r.mass > ZERO_MASS_TOL:
            step_energies += r.weight * r.mass * r.path.step_energies
    return AssembledPath(base=p.base, steps=steps, sections=tuple(sections), step_energies=step_energies)


def mean_entropy(base: FiniteBase, p: FiberedDensity) -> float:
    """Weighted sum of fiber entropies sum_j nu_j tr(P(x_j) log P(x_j))."""
    if p.base.size != base.size:
        raise DimensionMismatchError("base sizes differ")
    acc = 0.0
    for w, f in zip(base.weights, p.fibers):
        lam = np.linalg.eigvalsh(f)
        lam = lam[lam > ENTROPY_EIGENVALUE_FLOOR]
        acc += w * float(np.sum(lam * np.log(lam)))
    return acc


def monolithic_distance(
    vg: VerticalGradient, p: FiberedDensity, q: FiberedDensity, config: SolverConfig | None = None
):
    """Joint block solve on the product algebra (verification route).

    Folds the base weights into the block densities (nu_j P_j), which
    leaves all energies invariant, and minimizes the total action over
    all blocks at once with no per-fiber normalization.
    """
    cfg = config or SolverConfig()
    _check_bundle_compat(vg, p, q)
    p_blocks = [w * f for w, f in zip(vg.base.weights, p.fibers)]
    q_blocks = [w * f for w, f in zip(vg.base.weights, q.fibers)]
    return solve_block_geodesic(list(vg.per_fiber), p_blocks, q_blocks, cfg)


@dataclass(frozen=True)
class MeanCurvatureReport:
    """Mean curvature estimate against the worst fiber estimate."""

    mcurv_estimate: float
    fiber_estimates: tuple
    essinf_fiber: float
    bound_satisfied: bool
    pairs_evaluated: int
    pairs_skipped: int
    seed: int

    def record(self) -> dict:
        return {
            "mcurv_estimate": self.mcurv_estimate,
            "fiber_estimates": list(self.fiber_estimates),
            "essinf_fiber": self.essinf_fiber,
            "bound_satisfied": self.bound_satisfied,
            "pairs_evaluated": self.pairs_evaluated,
            "pairs_skipped": self.pairs_skipped,
            "seed": self.seed,
        }


def _fiber_seed(seed: int, j: int) -> int:
    return int(seed) + 1000 * (j + 1)


def mean_curvature_check(
    vg: VerticalGradient, sample_count: int, seed: int, config: SolverConfig | None = None
) -> MeanCurvatureReport:
    """Estimate the mean curvature bound and compare with fiber estimates.

    The bundle samples embed exactly the per-fiber pairs the fiber
    estimators draw (shared seeds), so the bound
    mcurv >= min_j fiber_estimate_j holds up to float reassociation.
    """
    if sample_count < 1:
        raise UsageError("sample_count must be >= 1")
    cfg = config or SolverConfig()
    k = vg.base.size
    n = vg.n
    fiber_reports = [
        estimate_curvature(vg.per_fiber[j], sample_count, _fiber_seed(seed, j), cfg) for j in range(k)
    ]
    fiber_estimates = tuple(rep.estimate for rep in fiber_reports)
    essinf = float(min(fiber_estimates))

    # Reproduce each fiber estimator's pair stream, then assemble bundle pairs.
    fiber_rngs = [np.random.default_rng(_fiber_seed(seed, j)) for j in range(k)]
    mass_rng = np.random.default_rng(seed)
    mcurv = np.inf
    evaluated = 0
    skipped = 0
    for _ in range(sample_count):
        pairs = [density_pair(fiber_rngs[j], n) for j in range(k)]
        raw = mass_rng.uniform(0.2, 1.0, size=k)
        masses = raw / float(np.dot(vg.base.weights, raw))
        p = FiberedDensity(vg.base, [masses[j] * pairs[j][0] for j in range(k)], normalize=False)
        q = FiberedDensity(vg.base, [masses[j] * pairs[j][1] for j in range(k)], normalize=False)
        result = disintegrated_distance(vg, p, q, cfg)
        if not result.feasible or result.total_sq <= 1e-8:
            skipped += 1
            continue
        path = assemble_global_path(result, p)
        ent_p = mean_entropy(vg.base, p)
        ent_q = mean_entropy(vg.base, q)
        gaps = []
        for j_t in range(1, path.steps):
            t = j_t / path.steps
            ent_t = mean_entropy(vg.base, path.sections[j_t])
            excess = (1.0 - t) * ent_p + t * ent_q - ent_t
            gaps.append(2.0 * excess / (t * (1.0 - t) * result.total_sq))
        mcurv = min(mcurv, float(min(gaps)))
        evaluated += 1
    return MeanCurvatureReport(
        mcurv_estimate=float(mcurv),
        fiber_estimates=fiber_estimates,
        essinf_fiber=essinf,
        bound_satisfied=bool(mcurv >= essinf - 1e-6),
        pairs_evaluated=evaluated,
        pairs_skipped=skipped,
        seed=seed,
    )
