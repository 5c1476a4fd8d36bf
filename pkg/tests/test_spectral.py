import numpy as np
import pytest

from ncot.errors import DimensionMismatchError, DomainError, SingularityError
from ncot.kernels import DLOG, LOG_MEAN
from ncot.spectral import (
    DensityMatrix,
    HermitianMatrix,
    dlog_solve,
    eig,
    func_calc,
    mult_op,
    positive_part,
    schur_apply,
    xlogx,
)
from ncot.sampling import complex_gaussian, random_density, random_hermitian

from oracles import quadrature_mult


def test_hermitian_symmetrizes_on_construction(rng):
    a = complex_gaussian(rng, (3, 3))
    h = HermitianMatrix(a)
    np.testing.assert_allclose(h.mat, h.mat.conj().T, atol=0)
    np.testing.assert_allclose(h.mat, (a + a.conj().T) / 2)


def test_density_clamps_and_renormalizes():
    d = DensityMatrix(np.diag([0.9, 0.4, -1e-12]))
    lam = d.eigenvalues()
    assert lam[0] >= 0.0
    np.testing.assert_allclose(np.trace(d.mat).real, 1.0, atol=1e-14)


def test_density_rejects_nonpositive_trace():
    with pytest.raises(SingularityError):
        DensityMatrix(np.diag([-1.0, -2.0]))


def test_eig_diag_example():
    dec = eig(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 3.0])
    np.testing.assert_allclose(np.abs(dec.eigenvectors), [[0, 1], [1, 0]], atol=1e-14)


def test_eig_identity_and_pauli_x():
    dec = eig(np.eye(4))
    np.testing.assert_allclose(dec.eigenvalues, np.ones(4))
    u = dec.eigenvectors
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-10)
    dec = eig(np.array([[0, 1], [1, 0]], dtype=complex))
    np.testing.assert_allclose(dec.eigenvalues, [-1.0, 1.0], atol=1e-14)


def test_eig_reconstruction_invariant(rng):
    for n in (2, 4, 7):
        a = random_hermitian(rng, n, scale=3.0)
        dec = eig(a)
        np.testing.assert_allclose(dec.reconstruct(), a, atol=1e-10 * np.linalg.norm(a))


def test_func_calc_identity_and_log():
    a = random_hermitian(np.random.default_rng(1), 3)
    np.testing.assert_allclose(func_calc(a, lambda x: x).mat, a, atol=1e-12)
    out = func_calc(np.diag([1.0, np.e]), np.log)
    np.testing.assert_allclose(out.mat, np.diag([0.0, 1.0]), atol=1e-14)


def test_func_calc_xlogx_on_normalized_identity():
    n = 4
    out = func_calc(np.eye(n) / n, xlogx)
    np.testing.assert_allclose(out.mat, (-np.log(n) / n) * np.eye(n), atol=1e-14)


def test_func_calc_domain_error_names_eigenvalue():
    with pytest.raises(DomainError, match="0.0"):
        func_calc(np.diag([0.0, 1.0]), np.log)


def test_schur_apply_scalar_kernel_cases():
    h = complex_gaussian(np.random.default_rng(2), (3, 3))
    out = schur_apply(2.0 * np.eye(3), LOG_MEAN, h)
    np.testing.assert_allclose(out, 2.0 * h, atol=1e-12)
    out = schur_apply(np.eye(3), DLOG, h)
    np.testing.assert_allclose(out, h, atol=1e-12)


def test_schur_apply_log_mean_frozen_value():
    # off-diagonal weight for spectrum {1, 2} is 1/log 2 (quadrature oracle)
    w = 1.0 / np.log(2.0)
    out = schur_apply(np.diag([1.0, 2.0]), LOG_MEAN, np.array([[0, 1], [1, 0]], dtype=complex))
    np.testing.assert_allclose(out, [[0, w], [w, 0]], atol=1e-14)
    oracle = quadrature_mult(np.diag([1.0, 2.0]), np.array([[0, 1], [1, 0]], dtype=complex))
    np.testing.assert_allclose(out, oracle, atol=1e-10)


def test_schur_contraction_bound(rng):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        a = random_density(rng, n) * n
        h = complex_gaussian(rng, (n, n))
        lam = np.linalg.eigvalsh((a + a.conj().T) / 2)
        bound = np.max(np.abs(LOG_MEAN.matrix(np.clip(lam, 0, None)))) * np.linalg.norm(h)
        assert np.linalg.norm(schur_apply(a, LOG_MEAN, h)) <= bound + 1e-12


def test_mult_op_scaled_identity():
    m = mult_op(np.eye(3) / 3)
    h = complex_gaussian(np.random.default_rng(3), (3, 3))
    np.testing.assert_allclose(m.apply(h), h / 3, atol=1e-13)


def test_mult_op_pure_state_boundary():
    m = mult_op(np.diag([1.0, 0.0]))
    h = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    np.testing.assert_allclose(m.apply(h), [[1.0, 0.0], [0.0, 0.0]], atol=1e-13)


def test_mult_op_norm_equals_max_eigenvalue(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        p = random_density(rng, n)
        lam_max = float(np.linalg.eigvalsh(p)[-1])
        assert abs(mult_op(p).opnorm() - lam_max) <= 1e-9


def test_mult_op_matches_quadrature(rng):
    for _ in range(5):
        n = int(rng.integers(2, 7))
        p = random_density(rng, n)
        h = complex_gaussian(rng, (n, n))
        np.testing.assert_allclose(mult_op(p).apply(h), quadrature_mult(p, h), atol=1e-9)


def test_mult_op_psd_superoperator(rng):
    p = random_density(rng, 3)
    w, _ = mult_op(p).eigh()
    assert w[0] >= -1e-12


def test_dlog_solve_identity_and_scalar():
    s = random_hermitian(np.random.default_rng(4), 3)
    np.testing.assert_allclose(dlog_solve(np.eye(3), s).mat, s, atol=1e-12)
    np.testing.assert_allclose(dlog_solve(2.5 * np.eye(3), s).mat, s / 2.5, atol=1e-12)


def test_dlog_solve_frozen_offdiagonal():
    s = np.array([[0, 1], [1, 0]], dtype=complex)
    x = dlog_solve(np.diag([1.0, 2.0]), s)
    np.testing.assert_allclose(x.mat, np.log(2.0) * s, atol=1e-14)
    # forward quadrature oracle inverts it
    np.testing.assert_allclose(quadrature_mult(np.diag([1.0, 2.0]), x.mat), s, atol=1e-10)


def test_dlog_solve_round_trip_and_trace(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        t = random_density(rng, n) + 0.2 * np.eye(n)
        s = random_hermitian(rng, n)
        x = dlog_solve(t, s)
        np.testing.assert_allclose(mult_op(t).apply(x.mat), s, atol=1e-9 * np.linalg.norm(s))
        assert abs(np.trace(t @ x.mat).real - np.trace(s).real) <= 1e-10


def test_dlog_solve_rejects_singular():
    with pytest.raises(SingularityError):
        dlog_solve(np.diag([1.0, 0.0]), np.eye(2))


def test_positive_part_examples():
    p = random_density(np.random.default_rng(5), 3)
    np.testing.assert_allclose(positive_part(p).mat, p, atol=1e-12)
    np.testing.assert_allclose(positive_part(np.diag([1.0, -1.0])).mat, np.diag([1.0, 0.0]), atol=0)


def test_positive_part_is_metric_projection(rng):
    x = random_hermitian(rng, 3)
    proj = positive_part(x).mat
    base = np.linalg.norm(x - proj)
    for _ in range(100):
        y = random_density(rng, 3) * rng.uniform(0.1, 3.0)
        assert base <= np.linalg.norm(x - y) + 1e-12


def test_schur_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        schur_apply(np.eye(2), LOG_MEAN, np.eye(3))
