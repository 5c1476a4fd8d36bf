"""Seeded random matrices, densities and derivations for estimators and checks."""

from __future__ import annotations

import numpy as np

from .derivation import Derivation


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Entries with independent N(0, 1/2) real and imaginary parts."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    g = complex_gaussian(rng, (n, n))
    return scale * 0.5 * (g + g.conj().T)


def random_density(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Normalized Y Y* with Y a (rank-restricted) complex Gaussian factor."""
    r = n if rank is None else rank
    y = complex_gaussian(rng, (n, r))
    a = y @ y.conj().T
    return a / float(np.trace(a).real)


def random_invertible_density(rng: np.random.Generator, n: int, floor: float = 0.05) -> np.ndarray:
    """Full-rank density bounded away from the boundary."""
    a = random_density(rng, n)
    return (a + floor * np.eye(n)) / (1.0 + floor * n)


def random_derivation(rng: np.random.Generator, n: int, m: int, scale: float = 1.0) -> Derivation:
    return Derivation([random_hermitian(rng, n, scale) for _ in range(m)])


def random_ergodic_derivation(rng: np.random.Generator, n: int, m: int = 2, max_tries: int = 50) -> Derivation:
    """Redraw until the joint commutant is trivial (a.s. immediate for m >= 2)."""
    for _ in range(max_tries):
        d = random_derivation(rng, n, max(m, 2))
        if d.is_ergodic()[0]:
            return d
    raise RuntimeError("failed to draw an ergodic derivation")


def density_pair(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """The sampling measure of the curvature estimator."""
    return random_density(rng, n), random_density(rng, n)
