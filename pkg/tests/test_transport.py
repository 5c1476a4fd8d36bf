import numpy as np
import pytest

from ncot.derivation import Derivation
from ncot.errors import InvalidPathError, UsageError
from ncot.sampling import (
    complex_gaussian,
    random_density,
    random_derivation,
    random_ergodic_derivation,
    random_hermitian,
)
from ncot.spectral import DensityMatrix, HermitianMatrix
from ncot.superop import vec
from ncot.transport import (
    PathInfeasibility,
    SolverConfig,
    TransportPath,
    linear_path,
    onsager,
    path_energy,
    s_operator,
    solve_geodesic,
    tangent_metric,
)

from conftest import SX, SZ
from oracles import commutative_dp_distance


def test_tangent_metric_identity_vanishes(rng):
    d = random_derivation(rng, 3, 2)
    p = random_density(rng, 3)
    b = random_hermitian(rng, 3)
    assert tangent_metric(d, p, np.eye(3), b) == pytest.approx(0.0, abs=1e-13)


def test_tangent_metric_uniform_density(rng):
    d = random_derivation(rng, 3, 2)
    a = random_hermitian(rng, 3)
    expected = sum(np.linalg.norm(d.grad(a)[k]) ** 2 for k in range(d.m)) / 3
    assert tangent_metric(d, np.eye(3) / 3, a, a) == pytest.approx(expected, rel=1e-12)


def test_tangent_metric_separating_bound(rng):
    d = random_derivation(rng, 3, 2)
    p = random_density(rng, 3)
    a = random_hermitian(rng, 3)
    bound = sum(np.linalg.norm(d.grad(a)[k]) ** 2 for k in range(d.m))
    assert tangent_metric(d, p, a, a) <= bound + 1e-10


def test_onsager_zero_derivation():
    g = onsager(Derivation([], n=3), np.eye(3) / 3)
    assert np.all(g.matrix == 0)


def test_onsager_uniform_is_scaled_laplacian(rng):
    d = random_derivation(rng, 3, 2)
    np.testing.assert_allclose(
        onsager(d, np.eye(3) / 3).matrix, d.laplacian().matrix / 3, atol=1e-12
    )


def test_onsager_represents_tangent_metric(rng):
    d = random_derivation(rng, 3, 2)
    p = random_density(rng, 3)
    a = random_hermitian(rng, 3)
    b = random_hermitian(rng, 3)
    lhs = float(np.real(np.vdot(vec(onsager(d, p).apply(a)), vec(b))))
    assert lhs == pytest.approx(tangent_metric(d, p, a, b), abs=1e-10)


def test_onsager_kernel_matches_laplacian_for_faithful(rng):
    for _ in range(5):
        n = int(rng.integers(2, 4))
        d = random_derivation(rng, n, 2)
        p = random_density(rng, n) * 0.9 + 0.1 * np.eye(n) / n
        gw, _ = onsager(d, p).eigh()
        lw, _ = d.laplacian().eigh()
        thresh_g = 1e-9 * max(gw[-1], 1e-30)
        thresh_l = 1e-9 * max(lw[-1], 1e-30)
        assert np.sum(gw <= thresh_g) == np.sum(lw <= thresh_l)


def test_s_operator_zero_derivation_is_identity():
    s = s_operator(Derivation([], n=2), np.eye(2) / 2)
    np.testing.assert_allclose(s.matrix, np.eye(4), atol=0)


def test_s_operator_uniform_ergodic(rng):
    d = random_ergodic_derivation(rng, 2)
    s = s_operator(d, np.eye(2) / 2)
    g = onsager(d, np.eye(2) / 2)
    # on the range of G they agree; on the kernel S acts as identity
    h = random_hermitian(rng, 2)
    h_traceless = h - np.trace(h) / 2 * np.eye(2)
    np.testing.assert_allclose(s.apply(h_traceless), g.apply(h_traceless), atol=1e-10)
    np.testing.assert_allclose(s.apply(np.eye(2)), np.eye(2), atol=1e-10)


def test_s_operator_invertible(rng):
    for _ in range(5):
        n = int(rng.integers(2, 4))
        d = random_derivation(rng, n, 2)
        p = random_density(rng, n)
        s = s_operator(d, p).matrix
        x = complex_gaussian(rng, (n * n,))
        solved = np.linalg.solve(s, x)
        np.testing.assert_allclose(s @ solved, x, atol=1e-9)


def test_s_operator_continuity_in_p(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    base = s_operator(d, p).matrix
    for eps in (1e-4, 1e-6):
        h = random_hermitian(rng, 2)
        h = h - np.trace(h) / 2 * np.eye(2)
        pert = DensityMatrix(p + eps * h).mat
        moved = s_operator(d, pert).matrix
        assert np.linalg.norm(moved - base) < 50 * eps + 1e-8


def test_linear_path_same_endpoints(rng):
    d = random_derivation(rng, 2, 2)
    p = random_density(rng, 2)
    path = linear_path(d, p, p.copy(), 8)
    assert isinstance(path, TransportPath)
    assert path.energy() == pytest.approx(0.0, abs=1e-20)


def test_linear_path_ergodic_feasible(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    path = linear_path(d, p, q, 16)
    assert isinstance(path, TransportPath)
    assert path.energy() > 0
    # potentials are traceless
    for u in path.potentials:
        assert abs(np.trace(u.mat)) < 1e-10
    path.validate(d)


def test_linear_path_zero_derivation_infeasible(rng):
    d = Derivation([], n=2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    out = linear_path(d, p, q, 8)
    assert isinstance(out, PathInfeasibility)
    assert out.norm == pytest.approx(np.linalg.norm(q / np.trace(q).real - p / np.trace(p).real), rel=1e-6)


def test_solve_same_endpoints(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    res = solve_geodesic(d, p, p.copy(), SolverConfig(steps=8))
    assert res.distance == 0.0
    assert res.converged
    assert all(np.allclose(u.mat, 0) for u in res.path.potentials)


def test_solve_upper_bound_vs_linear(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    lin = linear_path(d, p, q, 16)
    res = solve_geodesic(d, p, q, SolverConfig(steps=16))
    assert res.energy <= lin.energy() + 1e-9
    assert res.distance == pytest.approx(np.sqrt(res.energy), abs=1e-15)


def test_solve_symmetry(rng):
    cfg = SolverConfig(steps=16)
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    ab = solve_geodesic(d, p, q, cfg)
    ba = solve_geodesic(d, q, p, cfg)
    assert ab.distance == pytest.approx(ba.distance, rel=2e-4)


def test_solve_commutative_dp_oracle():
    d = Derivation([SX])
    rng = np.random.default_rng(9)
    for _ in range(3):
        p1, q1 = rng.uniform(0.05, 0.95, size=2)
        p = np.diag([p1, 1 - p1]).astype(complex)
        q = np.diag([q1, 1 - q1]).astype(complex)
        res = solve_geodesic(d, p, q, SolverConfig(steps=16))
        oracle = commutative_dp_distance(p1, q1)
        assert res.distance == pytest.approx(oracle, rel=1e-3)


def test_solve_mass_obstruction_block_diagonal(rng):
    t = random_hermitian(rng, 2)
    gen = np.zeros((4, 4), dtype=complex)
    gen[:2, :2] = t
    gen[2:, 2:] = 3 * t
    d = Derivation([gen])
    p = np.zeros((4, 4), dtype=complex)
    p[:2, :2] = 0.4 * random_density(rng, 2)
    p[2:, 2:] = 0.6 * random_density(rng, 2)
    q = np.zeros((4, 4), dtype=complex)
    q[:2, :2] = 0.7 * random_density(rng, 2)
    q[2:, 2:] = 0.3 * random_density(rng, 2)
    res = solve_geodesic(d, p, q, SolverConfig(steps=8))
    assert not res.feasible
    assert res.distance == np.inf
    assert res.infeasible_component_norm > 1e-8
    assert res.path is None


def test_solve_triangle_inequality(rng):
    cfg = SolverConfig(steps=16)
    d = random_ergodic_derivation(rng, 2)
    p, q, r = (random_density(rng, 2) for _ in range(3))
    w_pr = solve_geodesic(d, p, r, cfg).distance
    w_pq = solve_geodesic(d, p, q, cfg).distance
    w_qr = solve_geodesic(d, q, r, cfg).distance
    assert w_pr <= (w_pq + w_qr) * (1 + 3e-4)


def test_path_energy_constant_zero():
    p = np.diag([0.5, 0.5]).astype(complex)
    path = TransportPath(
        steps=4,
        densities=[DensityMatrix(p)] * 5,
        potentials=[HermitianMatrix(np.zeros((2, 2)))] * 4,
        step_energies=np.zeros(4),
    )
    assert path_energy(Derivation([SZ]), path) == 0.0


def test_path_energy_time_reversal(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    res = solve_geodesic(d, p, q, SolverConfig(steps=8))
    fwd = path_energy(d, res.path)
    rev = path_energy(d, res.path.reversed())
    assert fwd == pytest.approx(rev, abs=1e-10)


def test_path_energy_rejects_invalid(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    path = TransportPath(
        steps=2,
        densities=[DensityMatrix(p), DensityMatrix(q), DensityMatrix(p)],
        potentials=[HermitianMatrix(np.zeros((2, 2)))] * 2,
        step_energies=np.zeros(2),
    )
    with pytest.raises(InvalidPathError):
        path_energy(d, path)


def test_solver_converges_flag_and_iterations(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    starved = solve_geodesic(d, p, q, SolverConfig(steps=16, max_iters=1, tol=1e-16, patience=5))
    assert starved.iterations <= 1
    assert not starved.converged
    assert np.isfinite(starved.energy)


def test_solver_restarts_deterministic(rng):
    d = random_ergodic_derivation(rng, 2)
    p = random_density(rng, 2)
    q = random_density(rng, 2)
    cfg = SolverConfig(steps=8, restarts=1, seed=5)
    r1 = solve_geodesic(d, p, q, cfg)
    r2 = solve_geodesic(d, p, q, cfg)
    assert r1.energy == r2.energy


def test_linear_path_requires_positive_steps(rng):
    with pytest.raises(UsageError):
        linear_path(Derivation([SZ]), np.eye(2) / 2, np.eye(2) / 2, 0)
