"""Relative entropy, its dissipation along heat flow, and curvature estimates.

The entropy of a density is tr(p log p) computed spectrally with
0 log 0 = 0; it lies in [-log n, 0].  Along the heat flow it decreases
with rate given by the dlog quadratic form of the gradient, and the
largest K for which entropy is K-semiconvex along solver geodesics is
estimated by sampling density pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .derivation import Derivation
from .errors import DegeneratePairError, SingularityError, UsageError
from .kernels import DLOG
from .sampling import density_pair
from .spectral import DensityMatrix, as_matrix, schur_apply
from .transport import SolverConfig, TransportPath, TransportResult, solve_geodesic

# Eigenvalues below this are treated as exact zeros in x log x.
ENTROPY_EIGENVALUE_FLOOR = 1e-14
# Pairs closer than this in squared distance are skipped by the estimator.
DEGENERATE_W2SQ = 1e-8


def entropy(p) -> float:
    """tr(p log p) with 0 log 0 = 0; lies in [-log n, 0] for densities."""
    mat = as_matrix(p)
    lam = np.linalg.eigvalsh(mat)
    lam = lam[lam > ENTROPY_EIGENVALUE_FLOOR]
    return float(np.sum(lam * np.log(lam)))


def entropy_dissipation(d: Derivation, p) -> float:
    """Time derivative of entropy along the heat flow at p (nonpositive).

    Equals -sum_k <dlog-multiplier of grad(p)_k, grad(p)_k>; requires p
    invertible.
    """
    pmat = as_matrix(p)
    lam_min = float(np.linalg.eigvalsh(pmat)[0])
    if lam_min <= 1e-10:
        raise SingularityError(f"dissipation needs an invertible density, min eigenvalue {lam_min!r}")
    g = d.grad(pmat)
    acc = 0.0
    for k in range(d.m):
        acc += float(np.real(np.vdot(schur_apply(pmat, DLOG, g[k]).reshape(-1), g[k].reshape(-1))))
    return -acc


def curvature_gap(p, q, path: TransportPath, w2sq: float) -> float:
    """Largest K for which the entropy of the path is K-semiconvex.

    Evaluates 2 [(1-t) Ent(p) + t Ent(q) - Ent(rho_t)] / (t (1-t) w2sq)
    at the interior grid times of the path and returns the minimum.
    """
    if w2sq <= DEGENERATE_W2SQ:
        raise DegeneratePairError(f"squared distance {w2sq!r} below tolerance")
    pmat = as_matrix(p)
    qmat = as_matrix(q)
    dens = path.density_matrices()
    if np.linalg.norm(dens[0] - pmat) > 1e-6 or np.linalg.norm(dens[-1] - qmat) > 1e-6:
        raise UsageError("path endpoints do not match the given pair")
    ent_p = entropy(pmat)
    ent_q = entropy(qmat)
    n_steps = path.steps
    gaps = []
    for j in range(1, n_steps):
        t = j / n_steps
        excess = (1.0 - t) * ent_p + t * ent_q - entropy(dens[j])
        gaps.append(2.0 * excess / (t * (1.0 - t) * w2sq))
    return float(min(gaps))


@dataclass(frozen=True)
class CurvatureReport:
    """Sampled lower-curvature estimate; exact only in the sampling limit
    and up to solver optimality (the solver minimizer need not be the
    certifying one when minimizers are non-unique)."""

    estimate: float
    pairs_evaluated: int
    pairs_skipped: int
    worst_pair_index: int | None
    seed: int
    worst_pair: tuple | None = None
    pair_gaps: tuple = field(default=(), repr=False)

    def record(self) -> dict:
        return {
            "estimate": self.estimate,
            "pairs_evaluated": self.pairs_evaluated,
            "pairs_skipped": self.pairs_skipped,
            "worst_pair_index": self.worst_pair_index,
            "seed": self.seed,
        }


def estimate_curvature(
    d: Derivation, sample_count: int, seed: int, config: SolverConfig | None = None
) -> CurvatureReport:
    """Minimum curvature gap over sampled density pairs (deterministic in seed).

    Pairs are drawn as normalized Gaussian factors; degenerate pairs
    (squared distance below 1e-8) and solver-infeasible pairs are
    skipped and counted.  With no valid pair the estimate is +inf.
    """
    if sample_count < 1:
        raise UsageError("sample_count must be >= 1")
    cfg = config or SolverConfig()
    rng = np.random.default_rng(seed)
    estimate = np.inf
    worst_idx = None
    worst_pair = None
    evaluated = 0
    skipped = 0
    gaps = []
    for idx in range(sample_count):
        p, q = density_pair(rng, d.n)
        result = solve_geodesic(d, p, q, cfg)
        if not result.feasible or result.energy <= DEGENERATE_W2SQ:
            skipped += 1
            gaps.append(None)
            continue
        gap = curvature_gap(p, q, result.path, result.energy)
        gaps.append(gap)
        evaluated += 1
        if gap < estimate:
            estimate = gap
            worst_idx = idx
            worst_pair = (DensityMatrix(p), DensityMatrix(q))
    return CurvatureReport(
        estimate=float(estimate),
        pairs_evaluated=evaluated,
        pairs_skipped=skipped,
        worst_pair_index=worst_idx,
        seed=seed,
        worst_pair=worst_pair,
        pair_gaps=tuple(gaps),
    )
