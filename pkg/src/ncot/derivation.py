"""Symmetric gradients on (M_n(C), tr) built from commutators.

A derivation is an m-tuple of Hermitian generators T_1..T_m acting as
grad(a)_k = i [T_k, a].  The convention with the factor i keeps each
component skew-adjoint as a superoperator (adjoint = negative) while
mapping Hermitian matrices to Hermitian matrices, so tangent potentials
stay Hermitian.  The induced Laplacian is a -> sum_k [T_k, [T_k, a]].
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError
from .spectral import DensityMatrix, HermitianMatrix, as_matrix, hermitize
from .superop import Superoperator, commutator_superop

# Relative threshold separating genuine commutant directions from noise.
KERNEL_EIGENVALUE_RTOL = 1e-9
_KERNEL_ATOL = 1e-12


class Derivation:
    """Generators of a symmetric gradient; caches the Laplacian spectrum.

    Immutable after construction; the cached spectral data make repeated
    heat flows and kernel projections cheap.
    """

    def __init__(self, generators, n: int | None = None):
        gens = [HermitianMatrix(as_matrix(g)).mat for g in generators]
        if gens:
            dims = {g.shape[0] for g in gens}
            if len(dims) != 1:
                raise DimensionMismatchError(f"generators have mixed dimensions {sorted(dims)}")
            inferred = dims.pop()
            if n is not None and n != inferred:
                raise DimensionMismatchError(f"declared dimension {n} != generator dimension {inferred}")
            n = inferred
        elif n is None:
            raise DimensionMismatchError("empty generator list requires an explicit dimension")
        self.n = int(n)
        self.generators = tuple(gens)

    @property
    def m(self) -> int:
        return len(self.generators)

    def __repr__(self):
        return f"Derivation(n={self.n}, m={self.m})"

    @cached_property
    def component_superops(self) -> tuple[np.ndarray, ...]:
        """Superoperator matrices of the components a -> i [T_k, a]."""
        return tuple(commutator_superop(t) for t in self.generators)

    @cached_property
    def laplacian_eig(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.laplacian().matrix)

    @cached_property
    def kernel_basis_vectors(self) -> np.ndarray:
        """Column eigenvectors of the Laplacian kernel (HS-orthonormal)."""
        w, v = self.laplacian_eig
        top = float(w[-1]) if w.size else 0.0
        thresh = max(KERNEL_EIGENVALUE_RTOL * top, _KERNEL_ATOL)
        return v[:, w <= thresh]

    def kernel_project(self, h: np.ndarray) -> np.ndarray:
        """HS-orthogonal projection onto ker(Laplacian) = joint commutant."""
        b = self.kernel_basis_vectors
        v = np.asarray(h, dtype=complex).reshape(-1, order="F")
        return (b @ (b.conj().T @ v)).reshape((self.n, self.n), order="F")

    def grad(self, a) -> np.ndarray:
        """Gradient tuple, stacked as an (m, n, n) array."""
        amat = as_matrix(a)
        if amat.shape[0] != self.n:
            raise DimensionMismatchError(f"argument dimension {amat.shape[0]} != derivation dimension {self.n}")
        out = np.empty((self.m, self.n, self.n), dtype=complex)
        for k, t in enumerate(self.generators):
            out[k] = 1j * (t @ amat - amat @ t)
        return out

    def divergence(self, v) -> np.ndarray:
        """Adjoint of grad: (v_k) -> sum_k -i [T_k, v_k]."""
        varr = np.asarray(v, dtype=complex)
        if varr.shape != (self.m, self.n, self.n):
            raise DimensionMismatchError(f"expected {self.m} matrices of size {self.n}, got shape {varr.shape}")
        out = np.zeros((self.n, self.n), dtype=complex)
        for k, t in enumerate(self.generators):
            out += -1j * (t @ varr[k] - varr[k] @ t)
        return out

    def laplacian(self) -> Superoperator:
        """Positive HS-self-adjoint superoperator a -> sum_k [T_k, [T_k, a]]."""
        n2 = self.n * self.n
        mat = np.zeros((n2, n2), dtype=complex)
        for d in self.component_superops:
            mat += d.conj().T @ d
        return Superoperator(self.n, mat)

    def heat(self, p, t: float) -> DensityMatrix:
        """Heat semigroup exp(-t Laplacian) applied to a density.

        Trace is preserved (identity lies in the kernel) and positivity
        holds up to clamping at construction of the result.
        """
        if t < 0:
            raise ValueError(f"heat flow requires t >= 0, got {t}")
        pmat = as_matrix(p)
        if pmat.shape[0] != self.n:
            raise DimensionMismatchError("density dimension differs from derivation dimension")
        w, v = self.laplacian_eig
        coeff = v.conj().T @ pmat.reshape(-1, order="F")
        evolved = v @ (np.exp(-t * w) * coeff)
        return DensityMatrix(hermitize(evolved.reshape((self.n, self.n), order="F")))

    def spectral_gap(self) -> float:
        """Smallest nonzero Laplacian eigenvalue (0 for the zero derivation).

        1/sqrt(gap) is the Poincare constant on the orthocomplement of
        the kernel.
        """
        w, _ = self.laplacian_eig
        top = float(w[-1]) if w.size else 0.0
        thresh = max(KERNEL_EIGENVALUE_RTOL * top, _KERNEL_ATOL)
        nonzero = w[w > thresh]
        return float(nonzero[0]) if nonzero.size else 0.0

    def is_ergodic(self) -> tuple[bool, list[np.ndarray]]:
        """Whether ker(Laplacian) is one-dimensional, plus an HS-orthonormal kernel basis."""
        b = self.kernel_basis_vectors
        basis = [b[:, j].reshape((self.n, self.n), order="F") for j in range(b.shape[1])]
        return b.shape[1] == 1, basis


def grad(d: Derivation, a) -> np.ndarray:
    return d.grad(a)


def divergence(d: Derivation, v) -> np.ndarray:
    return d.divergence(v)


def laplacian(d: Derivation) -> Superoperator:
    return d.laplacian()


def heat(d: Derivation, p, t: float) -> DensityMatrix:
    return d.heat(p, t)


def spectral_gap(d: Derivation) -> float:
    return d.spectral_gap()


def is_ergodic(d: Derivation) -> tuple[bool, list[np.ndarray]]:
    return d.is_ergodic()
