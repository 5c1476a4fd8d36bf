"""Hermitian spectral calculus and logarithmic-mean multiplication operators.

All degenerate-input handling happens at construction time: Hermitian
matrices are symmetrized, densities clamped and renormalized.  Downstream
operations may then assume clean inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, DomainError, EigensolverError, SingularityError
from .kernels import LOG_MEAN, TwoVariableKernel, log_mean
from .superop import Superoperator, vec

HERMITIZE_TOL = 1e-12
EIGENVALUE_CLAMP = 1e-10
DLOG_EIGENVALUE_FLOOR = 1e-12


def _as_square_array(entries, *, name: str = "matrix") -> np.ndarray:
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


class HermitianMatrix:
    """A complex n x n Hermitian matrix, symmetrized on construction."""

    __slots__ = ("n", "mat")

    def __init__(self, entries):
        a = _as_square_array(entries)
        self.n = a.shape[0]
        self.mat = 0.5 * (a + a.conj().T)

    def __repr__(self):
        return f"HermitianMatrix(n={self.n})"

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def trace(self) -> float:
        return float(np.trace(self.mat).real)


class DensityMatrix:
    """Positive trace-one matrix; eigenvalues clamped at 0 and trace renormalized."""

    __slots__ = ("n", "mat", "base")

    def __init__(self, entries):
        base = entries if isinstance(entries, HermitianMatrix) else HermitianMatrix(entries)
        self.base = base
        self.n = base.n
        w, u = _eigh_raw(base.mat)
        if w[0] >= 0.0 and abs(w.sum() - 1.0) <= 1e-13:
            # already clean; keep entries bit-stable (idempotent construction)
            self.mat = base.mat
            return
        w = np.clip(w, 0.0, None)
        tr = float(w.sum())
        if tr <= 0.0:
            raise SingularityError("density has nonpositive trace after clamping")
        w = w / tr
        self.mat = hermitize((u * w) @ u.conj().T)

    def __repr__(self):
        return f"DensityMatrix(n={self.n})"

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and a unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a*)/2 of a square array."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def as_matrix(a) -> np.ndarray:
    """Coerce HermitianMatrix / DensityMatrix / array-like to an ndarray."""
    if isinstance(a, (HermitianMatrix, DensityMatrix)):
        return a.mat
    return _as_square_array(a)


def _eigh_raw(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure is exotic
        raise EigensolverError(f"Hermitian eigensolver did not converge: {exc}") from exc


def eig(a) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    mat = hermitize(as_matrix(a))
    w, u = _eigh_raw(mat)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=u)


def func_calc(a, f: Callable[[float], float]) -> HermitianMatrix:
    """Apply a real scalar function to a Hermitian matrix via its spectrum.

    Raises :class:`DomainError` naming the eigenvalue if f is undefined
    (non-finite) there.
    """
    dec = eig(a)
    vals = np.empty_like(dec.eigenvalues)
    for i, lam in enumerate(dec.eigenvalues):
        with np.errstate(all="ignore"):
            y = f(float(lam))
        if not np.isfinite(y):
            raise DomainError(f"function undefined at eigenvalue {lam!r}")
        vals[i] = y
    u = dec.eigenvectors
    return HermitianMatrix((u * vals) @ u.conj().T)


def xlogx(x: float) -> float:
    """x log x extended by 0 at 0 (and at clamp-level negatives)."""
    if x <= 1e-14:
        return 0.0
    return x * np.log(x)


def schur_apply(a, f: TwoVariableKernel, h) -> np.ndarray:
    """Apply the kernel f entrywise in the eigenbasis of a.

    With a = U diag(lam) U*, returns U (f(lam_i, lam_j) o (U* h U)) U*.
    """
    dec = eig(a)
    hmat = _as_square_array(h, name="argument")
    if hmat.shape[0] != dec.eigenvalues.shape[0]:
        raise DimensionMismatchError("kernel base and argument dimensions differ")
    u = dec.eigenvectors
    kern = f.matrix(dec.eigenvalues)
    return u @ (kern * (u.conj().T @ hmat @ u)) @ u.conj().T


def mult_op(p) -> Superoperator:
    """Logarithmic-mean multiplication operator of a positive matrix.

    Positive semidefinite w.r.t. the Hilbert-Schmidt inner product with
    operator norm equal to the largest eigenvalue of p; agrees with the
    quadrature of alpha -> p^alpha h p^(1-alpha).
    """
    dec = eig(p)
    u = dec.eigenvectors
    n = u.shape[0]
    kern = log_mean(np.clip(dec.eigenvalues, 0.0, None)[:, None], np.clip(dec.eigenvalues, 0.0, None)[None, :])
    w = np.kron(u.conj(), u)
    m = w @ (vec(kern)[:, None] * w.conj().T)
    return Superoperator(n, hermitize(m))


def dlog_solve(t, s) -> HermitianMatrix:
    """Solve the integral equation int_0^1 T^a X T^(1-a) da = S for X.

    Requires all eigenvalues of t strictly above the floor; the solution
    satisfies mult_op(t).apply(X) == S and tr(t X) == tr(S).
    """
    dec = eig(t)
    if dec.eigenvalues[0] <= DLOG_EIGENVALUE_FLOOR:
        raise SingularityError(
            f"dlog requires spectrum > {DLOG_EIGENVALUE_FLOOR}, found eigenvalue {dec.eigenvalues[0]!r}"
        )
    smat = as_matrix(s)
    if smat.shape[0] != dec.eigenvalues.shape[0]:
        raise DimensionMismatchError("t and s dimensions differ")
    u = dec.eigenvectors
    kern = log_mean(dec.eigenvalues[:, None], dec.eigenvalues[None, :])
    x = u @ ((u.conj().T @ smat @ u) / kern) @ u.conj().T
    return HermitianMatrix(x)


def positive_part(x) -> HermitianMatrix:
    """Metric projection onto the positive-semidefinite cone (HS norm)."""
    return func_calc(x, lambda lam: max(lam, 0.0))
