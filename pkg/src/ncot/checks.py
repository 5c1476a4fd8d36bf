"""Built-in invariant suites, runnable via the "check" CLI command.

Every check reports the measured residual against its tolerance; the
runner is deterministic for a fixed seed.  Suites: spectral, derivation,
entropy, transport, bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .bundle import (
    FiberedDensity,
    FiniteBase,
    VerticalGradient,
    assemble_global_path,
    disintegrated_distance,
    monolithic_distance,
)
from .derivation import Derivation
from .entropy import curvature_gap, entropy, entropy_dissipation
from .errors import UsageError
from .kernels import DLOG, LOG_MEAN, log_mean
from .sampling import (
    complex_gaussian,
    random_density,
    random_derivation,
    random_ergodic_derivation,
    random_hermitian,
    random_invertible_density,
)
from .spectral import as_matrix, dlog_solve, eig, func_calc, hermitize, mult_op, schur_apply
from .transport import SolverConfig, _block_step_data, linear_path, solve_geodesic, tangent_metric

SUITE_NAMES = ("spectral", "derivation", "entropy", "transport", "bundle")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def _hs(x) -> float:
    return float(np.linalg.norm(np.asarray(x).reshape(-1)))


# ---------------------------------------------------------------------------
# spectral
# ---------------------------------------------------------------------------


def suite_spectral(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    worst_tr = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        t = random_invertible_density(rng, n, floor=0.1) * n  # spectrum ~ O(1)
        s = random_hermitian(rng, n)
        x = dlog_solve(t, s)
        worst = max(worst, _hs(mult_op(t).apply(x.mat) - s) / max(_hs(s), 1e-300))
        worst_tr = max(worst_tr, abs(np.trace(t @ x.mat).real - np.trace(s).real))
    out.append(CheckResult("spectral", "pedersen_round_trip", worst, 1e-9))
    out.append(CheckResult("spectral", "pedersen_trace_identity", worst_tr, 1e-10))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 7))
        a = random_density(rng, n) * n
        h = complex_gaussian(rng, (n, n))
        lam = np.linalg.eigvalsh(as_matrix(hermitize(a)))
        bound = float(np.max(np.abs(log_mean(lam[:, None], lam[None, :])))) * _hs(h)
        worst = max(worst, _hs(schur_apply(a, LOG_MEAN, h)) - bound)
    out.append(CheckResult("spectral", "schur_contraction", max(worst, 0.0), 1e-12))

    worst = 0.0
    for _ in range(6):
        n = int(rng.integers(2, 7))
        p = random_density(rng, n)
        h = complex_gaussian(rng, (n, n))
        dec = eig(p)
        u, lam = dec.eigenvectors, np.clip(dec.eigenvalues, 0.0, None)

        def integrand(alpha):
            pa = (u * lam ** alpha) @ u.conj().T
            pb = (u * lam ** (1.0 - alpha)) @ u.conj().T
            return pa @ h @ pb

        ref, _ = quad_vec(integrand, 0.0, 1.0)
        worst = max(worst, _hs(mult_op(p).apply(h) - ref))
    out.append(CheckResult("spectral", "quadrature_equivalence", worst, 1e-9))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 7))
        p = random_density(rng, n)
        coeffs = rng.standard_normal(3)
        h = coeffs[0] * np.eye(n) + coeffs[1] * p + coeffs[2] * (p @ p)  # commutes with p
        worst = max(worst, _hs(mult_op(p).apply(h) - p @ h))
    out.append(CheckResult("spectral", "commutation_reduction", worst, 1e-10))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 7))
        a = random_density(rng, n)
        h = random_hermitian(rng, n)
        y = schur_apply(a, LOG_MEAN, h)
        worst = max(worst, _hs(y - y.conj().T))
    out.append(CheckResult("spectral", "hermiticity_preservation", worst, 1e-12))
    return out


# ---------------------------------------------------------------------------
# derivation
# ---------------------------------------------------------------------------


def suite_derivation(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, int(rng.integers(1, 4)))
        a = complex_gaussian(rng, (n, n))
        b = complex_gaussian(rng, (n, n))
        lhs = d.grad(a @ b)
        rhs = np.einsum("kij,jl->kil", d.grad(a), b) + np.einsum("ij,kjl->kil", a, d.grad(b))
        worst = max(worst, _hs(lhs - rhs))
    out.append(CheckResult("derivation", "leibniz_rule", worst, 1e-10))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, 2)
        a = complex_gaussian(rng, (n, n))
        worst = max(worst, _hs(d.grad(a.conj().T) - d.grad(a).conj().transpose(0, 2, 1)))
    out.append(CheckResult("derivation", "gradient_symmetry", worst, 1e-12))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, 2)
        a = random_hermitian(rng, n)
        v = np.stack([complex_gaussian(rng, (n, n)) for _ in range(d.m)])
        lhs = np.sum([np.vdot(d.grad(a)[k].reshape(-1), v[k].reshape(-1)) for k in range(d.m)])
        rhs = np.vdot(a.reshape(-1), d.divergence(v).reshape(-1))
        worst = max(worst, abs(lhs - rhs))
    out.append(CheckResult("derivation", "divergence_adjointness", worst, 1e-10))

    worst_chain = 0.0
    worst_bound = 0.0
    worst_key = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, int(rng.integers(1, 4)))
        rho = random_invertible_density(rng, n)
        g = d.grad(rho)
        glog = d.grad(func_calc(rho, np.log).mat)
        lam = np.linalg.eigvalsh(rho)
        fprime_sup = 1.0 / float(lam[0])
        m_op = mult_op(rho)
        for k in range(d.m):
            worst_chain = max(worst_chain, _hs(glog[k] - schur_apply(rho, DLOG, g[k])))
            worst_bound = max(worst_bound, _hs(glog[k]) - fprime_sup * _hs(g[k]))
            worst_key = max(worst_key, _hs(m_op.apply(glog[k]) - g[k]))
    out.append(CheckResult("derivation", "chain_rule", worst_chain, 1e-8))
    out.append(CheckResult("derivation", "chain_rule_norm_bound", max(worst_bound, 0.0), 1e-10))
    out.append(CheckResult("derivation", "key_identity", worst_key, 1e-8))

    worst_min = np.inf
    for _ in range(50):
        n = int(rng.integers(2, 4))
        d = random_ergodic_derivation(rng, n)
        p = random_density(rng, n, rank=max(1, n - 1))
        worst_min = min(worst_min, float(np.linalg.eigvalsh(d.heat(p, 0.1).mat)[0]))
    # worst_min must be strictly positive under ergodicity
    out.append(CheckResult("derivation", "positivity_improving", max(0.0, -worst_min), 0.0))

    worst_tr = 0.0
    worst_semi = 0.0
    for _ in range(6):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, 2)
        p = random_density(rng, n)
        for t in np.linspace(0.0, 1.0, 6):
            worst_tr = max(worst_tr, abs(np.trace(d.heat(p, t).mat).real - 1.0))
        s, t = 0.3, 0.4
        worst_semi = max(worst_semi, _hs(d.heat(d.heat(p, s).mat, t).mat - d.heat(p, s + t).mat))
    out.append(CheckResult("derivation", "trace_conservation", worst_tr, 1e-10))
    out.append(CheckResult("derivation", "semigroup_law", worst_semi, 1e-9))
    return out


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def suite_entropy(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for _ in range(8):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, 2)
        p = random_density(rng, n)
        ents = [entropy(d.heat(p, t).mat) for t in np.linspace(0.0, 1.0, 11)]
        worst = max(worst, float(np.max(np.diff(ents))))
    out.append(CheckResult("entropy", "heat_flow_monotonicity", max(worst, 0.0), 1e-10))

    worst = 0.0
    h = 1e-5
    for _ in range(10):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, 2)
        p = random_invertible_density(rng, n)
        rho = d.heat(p, 0.1)
        fd = (entropy(d.heat(p, 0.1 + h).mat) - entropy(d.heat(p, 0.1 - h).mat)) / (2 * h)
        worst = max(worst, abs(fd - entropy_dissipation(d, rho.mat)))
    out.append(CheckResult("entropy", "dissipation_identity", worst, 1e-3))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        p = random_density(rng, n)
        q = random_density(rng, n)
        for t in np.linspace(0.0, 1.0, 9):
            mix = (1 - t) * p + t * q
            worst = max(worst, entropy(mix) - ((1 - t) * entropy(p) + t * entropy(q)))
    out.append(CheckResult("entropy", "entropy_convexity", max(worst, 0.0), 1e-12))

    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    cfg = SolverConfig(steps=16)
    res = solve_geodesic(d, p, q, cfg)
    gap_fwd = curvature_gap(p, q, res.path, res.energy)
    gap_rev = curvature_gap(q, p, res.path.reversed(), res.energy)
    out.append(CheckResult("entropy", "curvature_gap_reversal", abs(gap_fwd - gap_rev), 1e-10))
    return out


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------


def suite_transport(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    cfg = SolverConfig(steps=16)

    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    lin = linear_path(d, p, q, cfg.steps)
    res = solve_geodesic(d, p, q, cfg)
    out.append(CheckResult("transport", "linear_upper_bound", res.energy - lin.energy(), 1e-9))

    worst = 0.0
    for _ in range(2):
        n = int(rng.integers(2, 4))
        dd = random_ergodic_derivation(rng, n)
        pp, qq, rr = (random_density(rng, n) for _ in range(3))
        w_pr = solve_geodesic(dd, pp, rr, cfg).distance
        w_pq = solve_geodesic(dd, pp, qq, cfg).distance
        w_qr = solve_geodesic(dd, qq, rr, cfg).distance
        worst = max(worst, (w_pr - w_pq - w_qr) / max(w_pr, 1e-300))
    out.append(CheckResult("transport", "triangle_inequality", max(worst, 0.0), 3e-4))

    p = random_density(rng, 2)
    res_same = solve_geodesic(d, p, p.copy(), cfg)
    viol = _hs(p - p) if res_same.distance < cfg.tol else 0.0
    out.append(CheckResult("transport", "definiteness_surrogate", viol, 1e-3))

    # Refinement: the fine-grid optimum is no worse than the coarse optimum
    # embedded piecewise-linearly into the fine grid.
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    res8 = solve_geodesic(d, p, q, SolverConfig(steps=8))
    stack8 = np.stack(res8.path.density_matrices())
    fine_t = np.linspace(0.0, 8.0, 33)
    lo = np.clip(np.floor(fine_t).astype(int), 0, 7)
    frac = (fine_t - lo)[:, None, None]
    embedded = (1.0 - frac) * stack8[lo] + frac * stack8[np.minimum(lo + 1, 8)]
    e_embedded = float(_block_step_data(d, embedded, 1.0 / 32)["energies"].sum())
    e32 = solve_geodesic(d, p, q, SolverConfig(steps=32)).energy
    out.append(
        CheckResult("transport", "refinement_embedding_bound", (e32 - e_embedded) / max(e_embedded, 1e-300), 1e-3)
    )

    diam_cfg = SolverConfig(steps=8, tol=1e-7, max_iters=400)
    worst_ratio = 0.0
    finite = True
    for _ in range(50):
        pp = random_density(rng, 2)
        qq = random_density(rng, 2)
        lin = linear_path(d, pp, qq, diam_cfg.steps)
        rr = solve_geodesic(d, pp, qq, diam_cfg)
        finite = finite and rr.feasible
        worst_ratio = max(worst_ratio, rr.energy - lin.energy())
    out.append(
        CheckResult("transport", "finite_diameter_ergodic", (0.0 if finite else 1.0) + max(worst_ratio, 0.0), 1e-9)
    )

    t_small = random_hermitian(rng, 2)
    gens = [np.block([[t_small, np.zeros((2, 2))], [np.zeros((2, 2)), 2 * t_small]])]
    d_block = Derivation(gens)
    p_block = np.zeros((4, 4), dtype=complex)
    p_block[:2, :2] = 0.3 * random_density(rng, 2)
    p_block[2:, 2:] = 0.7 * random_density(rng, 2)
    q_block = np.zeros((4, 4), dtype=complex)
    q_block[:2, :2] = 0.5 * random_density(rng, 2)
    q_block[2:, 2:] = 0.5 * random_density(rng, 2)
    res_block = solve_geodesic(d_block, p_block, q_block, cfg)
    out.append(
        CheckResult("transport", "mass_obstruction_flag", 0.0 if not res_block.feasible else 1.0, 0.5)
    )

    a = random_hermitian(rng, 3)
    p3 = random_density(rng, 3)
    d3 = random_derivation(rng, 3, 2)
    lhs = tangent_metric(d3, p3, a, a)
    bound = sum(_hs(d3.grad(a)[k]) ** 2 for k in range(d3.m))
    out.append(CheckResult("transport", "separating_function_bound", lhs - bound, 1e-10))
    return out


# ---------------------------------------------------------------------------
# bundle
# ---------------------------------------------------------------------------


def _random_bundle(rng, k: int, n: int):
    base = FiniteBase(weights=tuple(rng.uniform(0.5, 2.0, size=k)))
    vg = VerticalGradient(base, tuple(random_ergodic_derivation(rng, n) for _ in range(k)))
    raw = rng.uniform(0.2, 1.0, size=k)
    masses = raw / float(np.dot(base.weights, raw))
    p = FiberedDensity(base, [masses[j] * random_density(rng, n) for j in range(k)], normalize=False)
    q = FiberedDensity(base, [masses[j] * random_density(rng, n) for j in range(k)], normalize=False)
    return base, vg, p, q


def suite_bundle(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    cfg = SolverConfig(steps=16)

    worst_assert = 0.0
    worst_mono = 0.0
    for k in (2, 3):
        base, vg, p, q = _random_bundle(rng, k, 2)
        res = disintegrated_distance(vg, p, q, cfg)
        path = assemble_global_path(res, p)
        worst_assert = max(worst_assert, abs(path.energy - res.total_sq))
        mono = monolithic_distance(vg, p, q, cfg)
        worst_mono = max(worst_mono, abs(mono.energy - res.total_sq) / max(res.total_sq, 1e-300))
    out.append(CheckResult("bundle", "assembled_energy_additivity", worst_assert, 1e-9))
    out.append(CheckResult("bundle", "monolithic_agreement", worst_mono, 1e-3))

    base, vg, p, _ = _random_bundle(rng, 2, 2)
    other = rng.uniform(0.2, 1.0, size=2)
    other = other / float(np.dot(base.weights, other))
    q_bad = FiberedDensity(
        base, [other[j] * random_density(rng, 2) for j in range(2)], normalize=False
    )
    res_bad = disintegrated_distance(vg, p, q_bad, cfg)
    mono_bad = monolithic_distance(vg, p, q_bad, cfg)
    agree = (not res_bad.feasible) and (not mono_bad.feasible)
    out.append(CheckResult("bundle", "mass_preservation_gate", 0.0 if agree else 1.0, 0.5))

    base, vg, p, q = _random_bundle(rng, 3, 2)
    res = disintegrated_distance(vg, p, q, cfg)
    c = 1.7
    base2 = FiniteBase(weights=tuple(c * w for w in base.weights))
    vg2 = VerticalGradient(base2, vg.per_fiber)
    p2 = FiberedDensity(base2, [f / c for f in p.fibers], normalize=False)
    q2 = FiberedDensity(base2, [f / c for f in q.fibers], normalize=False)
    res2 = disintegrated_distance(vg2, p2, q2, cfg)
    # Fiber problems agree only to float rounding of the rescaled inputs, so
    # the iterative solver matches to its own tolerance, not bitwise.
    rel = abs(res.total_sq - res2.total_sq) / max(res.total_sq, 1e-300)
    out.append(CheckResult("bundle", "theta_normalization_covariance", rel, 1e-6))

    base, vg, p, q = _random_bundle(rng, 2, 2)
    other = rng.uniform(0.2, 1.0, size=2)
    other = other / float(np.dot(base.weights, other))
    r = FiberedDensity(base, [other[j] * random_density(rng, 2) for j in range(2)], normalize=False)
    flags_ok = True
    for i in (2, 4, 8, 16):
        mix = [(1 - 1 / i) * pf + (1 / i) * rf for pf, rf in zip(p.fibers, r.fibers)]
        p_i = FiberedDensity(base, mix, normalize=False)
        res_i = disintegrated_distance(vg, p_i, p, cfg)
        flags_ok = flags_ok and not res_i.feasible
    out.append(CheckResult("bundle", "non_metrization_witness", 0.0 if flags_ok else 1.0, 0.5))
    return out


SUITES = {
    "spectral": suite_spectral,
    "derivation": suite_derivation,
    "entropy": suite_entropy,
    "transport": suite_transport,
    "bundle": suite_bundle,
}


def run_suites(name: str, seed: int) -> list[CheckResult]:
    """Run one named suite or all of them; raises UsageError on bad names."""
    if name == "all":
        results = []
        for suite in SUITE_NAMES:
            results.extend(SUITES[suite](seed))
        return results
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)} or 'all'")
    return SUITES[name](seed)
