"""Discrete Benamou-Brenier machinery for matrix densities.

A path is discretized on a uniform grid with midpoint evaluation of the
Onsager operator G(rho) = div(M_rho grad(.)).  The squared distance is
the minimum of

    E = sum_j <rho_j - rho_(j-1), G(rhobar_j)^+ (rho_j - rho_(j-1))> / (2 dt)

over interior densities, parametrized as rho = Y Y* / tr(Y Y*) so that
iterates stay positive.  Components of a step increment outside the
range of G (spectral cutoff 1e-10 relative) count toward the infeasible
component norm; kernel components of interior iterates are pinned to
those of the left endpoint, which keeps discrete paths on the feasible
slice whenever the endpoints are compatible.

The solver operates on lists of independent blocks (a product algebra);
the single-algebra case is the one-block instance.  Energies are exactly
additive across blocks, which the bundle module uses for its monolithic
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .derivation import Derivation
from .errors import DimensionMismatchError, InvalidPathError, UsageError
from .kernels import log_mean, log_mean_divided_difference
from .spectral import DensityMatrix, HermitianMatrix, as_matrix, hermitize, mult_op
from .superop import Superoperator

# Spectral cutoff of the pseudo-inverse, relative to the top eigenvalue.
RANGE_CUTOFF_RTOL = 1e-10
_CUTOFF_ABS = 1e-14
# Eigenvalue floor inside G evaluation; keeps ker G = ker grad at the boundary.
G_EIGENVALUE_FLOOR = 1e-12
_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the geodesic solver (the problem-file "solver" block)."""

    steps: int = 16
    tol: float = 1e-8
    max_iters: int = 5000
    patience: int = 20
    feas_tol: float = 1e-8
    seed: int = 0
    restarts: int = 0


@dataclass(frozen=True)
class PathInfeasibility:
    """Structured infeasibility: the mass-compatibility obstruction.

    ``component`` is the part of the step increment (or of q - p) that no
    admissible velocity can produce; ``norm`` its Hilbert-Schmidt norm.
    """

    norm: float
    component: np.ndarray
    step: int | None = None
    message: str = "increment has a component outside range(G)"


@dataclass
class TransportPath:
    """Time-discretized admissible path (densities, potentials, energies)."""

    steps: int
    densities: list
    potentials: list
    step_energies: np.ndarray

    def __post_init__(self):
        if len(self.densities) != self.steps + 1:
            raise DimensionMismatchError("need steps + 1 densities")
        if len(self.potentials) != self.steps:
            raise DimensionMismatchError("need steps potentials")
        self.step_energies = np.asarray(self.step_energies, dtype=float)
        if self.step_energies.shape != (self.steps,):
            raise DimensionMismatchError("need one energy per step")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) / self.steps

    def density_matrices(self) -> list[np.ndarray]:
        return [as_matrix(r) for r in self.densities]

    def energy(self) -> float:
        return float(self.step_energies.sum())

    def reversed(self) -> "TransportPath":
        """Time reversal; potentials flip sign, energies are preserved."""
        dens = list(self.densities[::-1])
        pots = [HermitianMatrix(-as_matrix(u)) for u in self.potentials[::-1]]
        return TransportPath(self.steps, dens, pots, self.step_energies[::-1].copy())

    def validate(self, d: Derivation, feas_tol: float = 1e-8) -> None:
        """Check the discrete continuity equation and stored energies."""
        rr = np.stack(self.density_matrices())
        dt = 1.0 / self.steps
        data = _block_step_data(d, rr, dt)
        for j in range(self.steps):
            delta = rr[j + 1] - rr[j]
            u = as_matrix(self.potentials[j])
            gu = _apply_g(d, data, j, u)
            resid = np.linalg.norm(delta - dt * gu)
            if resid > feas_tol * np.linalg.norm(delta) + 1e-12:
                raise InvalidPathError(
                    f"continuity residual {resid:.3e} at step {j + 1} exceeds tolerance"
                )
            e = 0.5 * dt * float(np.real(np.vdot(gu.reshape(-1), u.reshape(-1))))
            if abs(e - self.step_energies[j]) > 1e-9 * max(1.0, abs(e)):
                raise InvalidPathError(f"stored step energy inconsistent at step {j + 1}")


@dataclass(frozen=True)
class TransportResult:
    """Outcome of a geodesic solve; distance = sqrt(energy) when feasible."""

    distance: float
    energy: float
    path: TransportPath | None
    iterations: int
    converged: bool
    infeasible_component_norm: float

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.distance)


# ---------------------------------------------------------------------------
# Quadratic form, Onsager operator, S_p
# ---------------------------------------------------------------------------


def tangent_metric(d: Derivation, p, a, b) -> float:
    """Inner product <a, b>_p = sum_k <M_p grad(a)_k, grad(b)_k> (HS)."""
    m = mult_op(p)
    ga = d.grad(a)
    gb = d.grad(b)
    acc = 0.0
    for k in range(d.m):
        acc += float(np.real(np.vdot(m.apply(ga[k]).reshape(-1), gb[k].reshape(-1))))
    return acc


def onsager(d: Derivation, p) -> Superoperator:
    """The operator G(p) = div(M_p grad(.)), HS-self-adjoint and PSD."""
    pmat = as_matrix(p)
    if pmat.shape[0] != d.n:
        raise DimensionMismatchError("density dimension differs from derivation dimension")
    m = mult_op(p).matrix
    n2 = d.n * d.n
    g = np.zeros((n2, n2), dtype=complex)
    for dk in d.component_superops:
        g += dk.conj().T @ m @ dk
    return Superoperator(d.n, 0.5 * (g + g.conj().T))


def s_operator(d: Derivation, p) -> Superoperator:
    """G(p) on its range, the identity on its kernel; positive invertible."""
    g = onsager(d, p)
    w, v = g.eigh()
    top = max(float(w[-1]), 0.0)
    cutoff = max(RANGE_CUTOFF_RTOL * top, _CUTOFF_ABS)
    vals = np.where(w > cutoff, w, 1.0)
    mat = (v * vals) @ v.conj().T
    return Superoperator(d.n, 0.5 * (mat + mat.conj().T))


# ---------------------------------------------------------------------------
# Batched step machinery (private)
# ---------------------------------------------------------------------------


def _vec_batch(mats: np.ndarray) -> np.ndarray:
    """Column-major vec of a (S, n, n) stack -> (S, n^2)."""
    s, n, _ = mats.shape
    return mats.transpose(0, 2, 1).reshape(s, n * n)


def _unvec_batch(vecs: np.ndarray, n: int) -> np.ndarray:
    s = vecs.shape[0]
    return vecs.reshape(s, n, n).transpose(0, 2, 1)


def _hermitize_batch(mats: np.ndarray) -> np.ndarray:
    return 0.5 * (mats + mats.conj().transpose(0, 2, 1))


def _block_step_data(d: Derivation, rr: np.ndarray, dt: float) -> dict:
    """Assemble G at the midpoints of a density stack and pseudo-solve.

    ``rr`` has shape (N + 1, n, n); returns per-step eigen-data, solved
    potentials (vectorized), step energies and infeasible residuals.
    """
    n = d.n
    rb = _hermitize_batch(0.5 * (rr[:-1] + rr[1:]))
    delta = rr[1:] - rr[:-1]
    lam, u = np.linalg.eigh(rb)
    lamf = np.clip(lam, G_EIGENVALUE_FLOOR, None)
    f = log_mean(lamf[:, :, None], lamf[:, None, :])
    vecf = f.transpose(0, 2, 1).reshape(f.shape[0], n * n)
    w = np.einsum("sij,skl->sikjl", u.conj(), u).reshape(f.shape[0], n * n, n * n)
    mm = (w * vecf[:, None, :]) @ w.conj().transpose(0, 2, 1)
    g = np.zeros_like(mm)
    for dk in d.component_superops:
        g += dk.conj().T @ mm @ dk
    g = _hermitize_batch(g)
    gw, gv = np.linalg.eigh(g)
    vd = _vec_batch(delta)
    coeff = np.einsum("sba,sb->sa", gv.conj(), vd)
    top = np.maximum(gw[:, -1], 0.0)
    cutoff = np.maximum(RANGE_CUTOFF_RTOL * top, _CUTOFF_ABS)
    mask = gw > cutoff[:, None]
    inv = np.where(mask, 1.0 / np.where(mask, gw, 1.0), 0.0)
    phi_v = np.einsum("sab,sb->sa", gv, inv * coeff)
    energies = np.sum((np.abs(coeff) ** 2) * inv, axis=1) / (2.0 * dt)
    infeas = np.sqrt(np.sum((np.abs(coeff) ** 2) * (~mask), axis=1))
    return {
        "rb": rb,
        "delta": delta,
        "lamf": lamf,
        "u": u,
        "gw": gw,
        "gv": gv,
        "mask": mask,
        "phi_v": phi_v,
        "energies": energies,
        "infeas": infeas,
        "dt": dt,
    }


def _apply_g(d: Derivation, data: dict, j: int, h: np.ndarray) -> np.ndarray:
    """Apply the assembled (floored) G at step j to a matrix."""
    n = d.n
    gv = data["gv"][j]
    gw = data["gw"][j]
    hv = np.asarray(h, dtype=complex).reshape(-1, order="F")
    out = gv @ (gw * (gv.conj().T @ hv))
    return out.reshape((n, n), order="F")


def _block_gradient_pieces(d: Derivation, data: dict) -> tuple[np.ndarray, np.ndarray]:
    """Potentials (as matrices) and the gradient of rho -> <G(rho) phi, phi>.

    Uses the closed-form divided difference of the logarithmic mean; the
    result is exact at constant pseudo-inverse rank.
    """
    n = d.n
    phi_v = data["phi_v"]
    phi = _hermitize_batch(_unvec_batch(phi_v, n))
    if d.m == 0:
        return phi, np.zeros_like(phi)
    wv = np.stack([(phi_v @ dk.T) for dk in d.component_superops], axis=1)
    wmats = wv.reshape(wv.shape[0], d.m, n, n).transpose(0, 1, 3, 2)
    u = data["u"]
    wt = np.einsum("sba,skbc,scd->skad", u.conj(), wmats, u)
    kern = log_mean_divided_difference(data["lamf"])
    t1 = np.einsum("skac,skbc,sabc->sba", wt.conj(), wt, kern)
    t2 = np.einsum("skca,skcb,sabc->sba", wt, wt.conj(), kern)
    nmat = np.einsum("sab,sbc,sdc->sad", u, t1 + t2, u.conj())
    return phi, _hermitize_batch(nmat)


def _kernel_project_batch(d: Derivation, mats: np.ndarray) -> np.ndarray:
    """Batched HS projection onto ker(Laplacian) of a (S, n, n) stack."""
    b = d.kernel_basis_vectors
    if b.shape[1] == 0:
        return np.zeros_like(mats)
    v = _vec_batch(mats)
    return _unvec_batch((v @ b.conj()) @ b.T, d.n)


def _linear_stack(p: np.ndarray, q: np.ndarray, steps: int) -> np.ndarray:
    t = (np.arange(steps + 1) / steps)[:, None, None]
    return (1.0 - t) * p[None] + t * q[None]


# ---------------------------------------------------------------------------
# Block problem solver
# ---------------------------------------------------------------------------


@dataclass
class BlockTransportResult:
    """Joint geodesic over independent blocks with additive energy."""

    energy: float
    distance: float
    stacks: list
    potentials: list
    block_step_energies: np.ndarray
    iterations: int
    converged: bool
    infeasible_component_norm: float

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.distance)

    @property
    def step_energies(self) -> np.ndarray:
        return self.block_step_energies.sum(axis=0)


class _BlockProblem:
    def __init__(self, derivations: list[Derivation], p_blocks, q_blocks, config: SolverConfig):
        self.ds = derivations
        self.ps = [hermitize(np.asarray(p, dtype=complex)) for p in p_blocks]
        self.qs = [hermitize(np.asarray(q, dtype=complex)) for q in q_blocks]
        for d, p, q in zip(self.ds, self.ps, self.qs):
            if p.shape != (d.n, d.n) or q.shape != (d.n, d.n):
                raise DimensionMismatchError("endpoint block dimensions differ from derivation")
        self.cfg = config
        self.nsteps = config.steps
        self.dt = 1.0 / config.steps

    def kernel_mismatch(self) -> tuple[float, list[np.ndarray]]:
        comps = [d.kernel_project(q - p) for d, p, q in zip(self.ds, self.ps, self.qs)]
        norm = float(np.sqrt(sum(np.linalg.norm(c) ** 2 for c in comps)))
        return norm, comps

    def stacks_from_interior(self, interiors: list[np.ndarray]) -> list[np.ndarray]:
        out = []
        for p, q, mid in zip(self.ps, self.qs, interiors):
            out.append(np.concatenate([p[None], mid, q[None]], axis=0))
        return out

    def evaluate(self, stacks: list[np.ndarray]) -> tuple[float, list[dict]]:
        datas = [_block_step_data(d, rr, self.dt) for d, rr in zip(self.ds, stacks)]
        energy = float(sum(data["energies"].sum() for data in datas))
        return energy, datas

    def project_interiors(self, rhos: list[np.ndarray]) -> list[np.ndarray]:
        out = []
        for d, p, rho in zip(self.ds, self.ps, rhos):
            out.append(rho - _kernel_project_batch(d, rho - p[None]))
        return out

    def gradient(self, datas: list[dict], rhos_raw: list[np.ndarray], ys: list[np.ndarray], scales: np.ndarray):
        """Gradient w.r.t. the interior factors Y of every block."""
        n_int = self.nsteps - 1
        xis = []
        for d, data in zip(self.ds, datas):
            phi, nmat = _block_gradient_pieces(d, data)
            xi = (phi[:-1] - phi[1:]) / self.dt - (nmat[:-1] + nmat[1:]) / (4.0 * self.dt)
            xi = xi - _kernel_project_batch(d, xi)
            xis.append(xi)
        kappa = np.zeros(n_int)
        for xi, rho in zip(xis, rhos_raw):
            kappa += np.real(np.einsum("sij,sji->s", xi, rho))
        grads = []
        for d, xi, y in zip(self.ds, xis, ys):
            eye = np.eye(d.n)
            grads.append(2.0 * (xi - kappa[:, None, None] * eye[None]) @ y / scales[:, None, None])
        return grads


def _interiors_from_ys(problem: _BlockProblem, ys: list[np.ndarray]):
    aas = [y @ y.conj().transpose(0, 2, 1) for y in ys]
    scales = np.zeros(problem.nsteps - 1)
    for aa in aas:
        scales += np.real(np.einsum("sii->s", aa))
    rhos_raw = [aa / scales[:, None, None] for aa in aas]
    rhos = problem.project_interiors(rhos_raw)
    return rhos, rhos_raw, scales


def _descend(problem: _BlockProblem, ys: list[np.ndarray]):
    """Armijo-backtracking gradient descent with a Barzilai-Borwein step seed."""
    cfg = problem.cfg
    rhos, rhos_raw, scales = _interiors_from_ys(problem, ys)
    stacks = problem.stacks_from_interior(rhos)
    energy, datas = problem.evaluate(stacks)
    best = (energy, stacks, datas)
    history = [energy]
    step = None
    prev_ys = None
    prev_grads = None
    iterations = 0
    converged = False
    for _ in range(cfg.max_iters):
        grads = problem.gradient(datas, rhos_raw, ys, scales)
        gnorm_sq = sum(float(np.sum(np.abs(g) ** 2)) for g in grads)
        if gnorm_sq < 1e-24:
            converged = True
            break
        if prev_ys is None:
            step = 1.0 / (np.sqrt(gnorm_sq) + 1.0)
        else:
            sy = 0.0
            yy = 0.0
            for yn, yo, gn, go in zip(ys, prev_ys, grads, prev_grads):
                dy = yn - yo
                dg = gn - go
                sy += float(np.real(np.sum(dy.conj() * dg)))
                yy += float(np.sum(np.abs(dg) ** 2))
            step = sy / yy if sy > 0 and yy > 0 else step * 2.0
        step = float(min(max(step, 1e-12), 1e6))
        prev_ys = [y.copy() for y in ys]
        prev_grads = [g.copy() for g in grads]
        accepted = False
        for _bt in range(_MAX_BACKTRACKS):
            trial_ys = [y - step * g for y, g in zip(ys, grads)]
            t_rhos, t_raw, t_scales = _interiors_from_ys(problem, trial_ys)
            t_stacks = problem.stacks_from_interior(t_rhos)
            t_energy, t_datas = problem.evaluate(t_stacks)
            if t_energy <= energy - _ARMIJO_C1 * step * gnorm_sq:
                ys = trial_ys
                rhos, rhos_raw, scales = t_rhos, t_raw, t_scales
                stacks, energy, datas = t_stacks, t_energy, t_datas
                accepted = True
                break
            step *= 0.5
        iterations += 1
        if not accepted:
            converged = True
            break
        if energy < best[0]:
            best = (energy, stacks, datas)
        history.append(energy)
        if len(history) > cfg.patience:
            drop = history[-cfg.patience - 1] - history[-1]
            if drop < cfg.tol * max(abs(history[-1]), 1e-300):
                converged = True
                break
    return best, iterations, converged


def solve_block_geodesic(
    derivations: list[Derivation], p_blocks, q_blocks, config: SolverConfig | None = None
) -> BlockTransportResult:
    """Minimize the discrete action jointly over independent blocks.

    Block densities are positive matrices whose traces sum to one across
    blocks; per-block masses are conserved along feasible paths.  Returns
    the infinity flag when the endpoint increment has a kernel component
    (the mass-compatibility obstruction).
    """
    cfg = config or SolverConfig()
    problem = _BlockProblem(derivations, p_blocks, q_blocks, cfg)
    nblocks = len(problem.ds)
    mismatch, _comps = problem.kernel_mismatch()
    if mismatch > cfg.feas_tol:
        return BlockTransportResult(
            energy=np.inf,
            distance=np.inf,
            stacks=[],
            potentials=[],
            block_step_energies=np.full((nblocks, cfg.steps), np.inf),
            iterations=0,
            converged=True,
            infeasible_component_norm=mismatch,
        )
    gap = float(np.sqrt(sum(np.linalg.norm(q - p) ** 2 for p, q in zip(problem.ps, problem.qs))))
    if gap <= 1e-13:
        stacks = [np.repeat(p[None], cfg.steps + 1, axis=0) for p in problem.ps]
        pots = [np.zeros((cfg.steps, d.n, d.n), dtype=complex) for d in problem.ds]
        return BlockTransportResult(
            energy=0.0,
            distance=0.0,
            stacks=stacks,
            potentials=pots,
            block_step_energies=np.zeros((nblocks, cfg.steps)),
            iterations=0,
            converged=True,
            infeasible_component_norm=0.0,
        )

    lin_stacks = [_linear_stack(p, q, cfg.steps) for p, q in zip(problem.ps, problem.qs)]
    lin_energy, lin_datas = problem.evaluate(lin_stacks)
    # Residual against q - p itself (each delta is (q - p)/steps).
    lin_resid = _max_step_residual(lin_datas) * cfg.steps
    if lin_resid > cfg.feas_tol:
        return BlockTransportResult(
            energy=np.inf,
            distance=np.inf,
            stacks=[],
            potentials=[],
            block_step_energies=np.full((nblocks, cfg.steps), np.inf),
            iterations=0,
            converged=True,
            infeasible_component_norm=lin_resid,
        )

    def factorize(stacks):
        ys = []
        for rr in stacks:
            lam, u = np.linalg.eigh(_hermitize_batch(rr[1:-1]))
            ys.append(u * np.sqrt(np.clip(lam, 1e-12, None))[:, None, :])
        return ys

    best = (lin_energy, lin_stacks, lin_datas)
    iterations = 0
    converged = True
    runs = 1 + max(cfg.restarts, 0)
    rng = np.random.default_rng(cfg.seed) if cfg.restarts > 0 else None
    for run in range(runs):
        ys = factorize(lin_stacks)
        if run > 0:
            ys = [y + 0.05 * _complex_noise(rng, y.shape) for y in ys]
        run_best, run_iters, run_conv = _descend(problem, ys)
        iterations += run_iters
        if run == 0:
            converged = run_conv
        if run_best[0] < best[0]:
            best = run_best
            converged = run_conv
    energy, stacks, datas = best
    pots = [_hermitize_batch(_unvec_batch(data["phi_v"], d.n)) / problem.dt for d, data in zip(problem.ds, datas)]
    return BlockTransportResult(
        energy=energy,
        distance=float(np.sqrt(max(energy, 0.0))),
        stacks=stacks,
        potentials=pots,
        block_step_energies=np.stack([data["energies"] for data in datas]),
        iterations=iterations,
        converged=converged,
        infeasible_component_norm=_max_step_residual(datas),
    )


def _max_step_residual(datas: list[dict]) -> float:
    per_step = np.zeros(datas[0]["infeas"].shape[0])
    for data in datas:
        per_step += data["infeas"] ** 2
    return float(np.sqrt(per_step.max()))


def _complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# Public single-algebra operations
# ---------------------------------------------------------------------------


def linear_path(
    d: Derivation, p, q, steps: int, feas_tol: float = 1e-8
) -> TransportPath | PathInfeasibility:
    """The straight-line path with minimum-norm potentials.

    Feasible whenever q - p is orthogonal to the range defect of G at
    every midpoint; its energy is an upper bound for the squared
    distance.
    """
    if steps < 1:
        raise UsageError("linear_path requires steps >= 1")
    pmat = as_matrix(DensityMatrix(as_matrix(p)))
    qmat = as_matrix(DensityMatrix(as_matrix(q)))
    rr = _linear_stack(pmat, qmat, steps)
    dt = 1.0 / steps
    data = _block_step_data(d, rr, dt)
    # Residuals are reported against q - p itself (delta_j = (q - p)/N).
    resid = data["infeas"] * steps
    worst = int(np.argmax(resid))
    if resid[worst] > feas_tol:
        vd = (qmat - pmat).reshape(-1, order="F")
        gv = data["gv"][worst]
        mask = data["mask"][worst]
        coeff = gv.conj().T @ vd
        comp = (gv[:, ~mask] @ coeff[~mask]).reshape((d.n, d.n), order="F")
        return PathInfeasibility(norm=float(resid[worst]), component=hermitize(comp), step=worst + 1)
    pots = _hermitize_batch(_unvec_batch(data["phi_v"], d.n)) / dt
    return TransportPath(
        steps=steps,
        densities=[DensityMatrix(rr[j]) for j in range(steps + 1)],
        potentials=[HermitianMatrix(pots[j]) for j in range(steps)],
        step_energies=data["energies"].copy(),
    )


def solve_geodesic(d: Derivation, p, q, config: SolverConfig | None = None) -> TransportResult:
    """Best admissible path between two densities and its action.

    Returns distance = sqrt(energy); the infinity flag signals a
    mass-compatibility obstruction (kernel component of q - p).
    """
    cfg = config or SolverConfig()
    pmat = as_matrix(DensityMatrix(as_matrix(p)))
    qmat = as_matrix(DensityMatrix(as_matrix(q)))
    block = solve_block_geodesic([d], [pmat], [qmat], cfg)
    if not block.feasible:
        return TransportResult(
            distance=np.inf,
            energy=np.inf,
            path=None,
            iterations=block.iterations,
            converged=block.converged,
            infeasible_component_norm=block.infeasible_component_norm,
        )
    rr = block.stacks[0]
    pots = block.potentials[0]
    path = TransportPath(
        steps=cfg.steps,
        densities=[DensityMatrix(rr[j]) for j in range(cfg.steps + 1)],
        potentials=[HermitianMatrix(pots[j]) for j in range(cfg.steps)],
        step_energies=block.block_step_energies[0].copy(),
    )
    return TransportResult(
        distance=block.distance,
        energy=block.energy,
        path=path,
        iterations=block.iterations,
        converged=block.converged,
        infeasible_component_norm=block.infeasible_component_norm,
    )


def path_energy(d: Derivation, path: TransportPath, feas_tol: float = 1e-8) -> float:
    """Total action of a path after validating the continuity equation."""
    path.validate(d, feas_tol=feas_tol)
    return path.energy()
