"""Linear maps on n x n matrices stored as n^2 x n^2 arrays.

Vectorization is column-major (``order="F"``) throughout the package:
vec(A X B) = kron(B.T, A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError


def vec(h: np.ndarray) -> np.ndarray:
    """Column-stack an n x n matrix into a length-n^2 vector."""
    return np.asarray(h, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=complex).reshape((n, n), order="F")


def left_mult(a: np.ndarray) -> np.ndarray:
    """Superoperator matrix of x -> a x."""
    a = np.asarray(a, dtype=complex)
    return np.kron(np.eye(a.shape[0]), a)


def right_mult(b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of x -> x b."""
    b = np.asarray(b, dtype=complex)
    return np.kron(b.T, np.eye(b.shape[0]))


def commutator_superop(t: np.ndarray) -> np.ndarray:
    """Superoperator matrix of x -> i [t, x]."""
    return 1j * (left_mult(t) - right_mult(t))


@dataclass(frozen=True)
class Superoperator:
    """A linear map on M_n(C) acting on column-stacked matrices."""

    n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.n * self.n, self.n * self.n):
            raise DimensionMismatchError(
                f"superoperator matrix must be {self.n ** 2} x {self.n ** 2}, got {m.shape}"
            )
        object.__setattr__(self, "matrix", m)

    def apply(self, h: np.ndarray) -> np.ndarray:
        """Apply to a matrix; bit-consistent with the vectorized action."""
        h = np.asarray(h, dtype=complex)
        if h.shape != (self.n, self.n):
            raise DimensionMismatchError(f"expected {self.n} x {self.n} argument, got {h.shape}")
        return unvec(self.matrix @ vec(h), self.n)

    def opnorm(self) -> float:
        """Operator norm w.r.t. the Hilbert-Schmidt norm (largest singular value)."""
        return float(np.linalg.norm(self.matrix, 2))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.matrix - self.matrix.conj().T) <= tol * max(1.0, self.opnorm()))

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition, valid for HS-self-adjoint superoperators."""
        w, v = np.linalg.eigh(self.matrix)
        return w, v

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if self.n != other.n:
            raise DimensionMismatchError("superoperator dimensions differ")
        return Superoperator(self.n, self.matrix @ other.matrix)

    def adjoint(self) -> "Superoperator":
        return Superoperator(self.n, self.matrix.conj().T)
