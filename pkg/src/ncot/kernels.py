"""Two-variable kernels used by the Schur-multiplier functional calculus.

The central object is the logarithmic mean

    log_mean(s, t) = (s - t) / (log s - log t),   log_mean(s, s) = s,

extended by continuity with log_mean(s, 0) = log_mean(0, s) = 0.  Its
reciprocal on the positive quadrant is the divided difference of log
("dlog"), and general divided-difference kernels of C^1 functions are
available through :func:`quantum_derivative`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Relative spread below which the diagonal series expansion is used.
# The kernel is analytic across the diagonal, so the series is exact to
# O(d^3) ~ 1e-24 at the switch point.
_DIAG_SWITCH = 1e-8


def log_mean(s, t):
    """Logarithmic mean of two nonnegative numbers (vectorized).

    Zero arguments are handled by the continuous extension (result 0);
    nearly equal arguments use the stable series s*(1 + d/2 - d^2/12)
    with d = (t - s)/s.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast_shapes(s.shape, t.shape))
    s, t = np.broadcast_arrays(s, t)
    big = np.maximum(s, t)
    pos = (s > 0) & (t > 0)
    near = pos & (np.abs(s - t) < _DIAG_SWITCH * big)
    far = pos & ~near
    if np.any(far):
        sf, tf = s[far], t[far]
        out[far] = (sf - tf) / (np.log(sf) - np.log(tf))
    if np.any(near):
        sn, tn = s[near], t[near]
        d = (tn - sn) / sn
        out[near] = sn * (1.0 + d / 2.0 - d * d / 12.0)
    return out if out.ndim else float(out)


def log_mean_d1(s, t):
    """Partial derivative of log_mean in its first argument (s, t > 0)."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast_shapes(s.shape, t.shape))
    s, t = np.broadcast_arrays(s, t)
    big = np.maximum(s, t)
    near = np.abs(s - t) < 1e-7 * big
    far = ~near
    if np.any(far):
        sf, tf = s[far], t[far]
        ell = np.log(sf) - np.log(tf)
        lm = (sf - tf) / ell
        out[far] = (1.0 - lm / sf) / ell
    if np.any(near):
        sn, tn = s[near], t[near]
        e = (sn - tn) / tn
        out[near] = 0.5 - e / 6.0
    return out if out.ndim else float(out)


def dlog(s, t):
    """Divided difference of log: 1/log_mean on the open positive quadrant."""
    lm = log_mean(s, t)
    return 1.0 / lm


@dataclass(frozen=True)
class TwoVariableKernel:
    """A real-valued kernel f(s, t) applied entrywise in an eigenbasis.

    ``evaluator`` is the scalar function; ``name`` identifies the kernel
    ("log_mean", "dlog", or "quantum_derivative_of(<f>)").  ``array_fn``,
    when present, is a vectorized evaluator used for speed.
    """

    evaluator: Callable[[float, float], float]
    name: str
    array_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )

    def matrix(self, eigenvalues: np.ndarray) -> np.ndarray:
        """Kernel values f(lam_i, lam_j) on the grid of an eigenvalue list."""
        lam = np.asarray(eigenvalues, dtype=float)
        if self.array_fn is not None:
            return np.asarray(self.array_fn(lam[:, None], lam[None, :]), dtype=float)
        n = lam.shape[0]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = self.evaluator(lam[i], lam[j])
        return out


LOG_MEAN = TwoVariableKernel(evaluator=lambda s, t: log_mean(s, t), name="log_mean", array_fn=log_mean)
DLOG = TwoVariableKernel(evaluator=lambda s, t: dlog(s, t), name="dlog", array_fn=dlog)


def quantum_derivative(
    f: Callable[[float], float],
    fprime: Callable[[float], float] | None = None,
    name: str | None = None,
) -> TwoVariableKernel:
    """Divided-difference kernel (f(s) - f(t))/(s - t) with diagonal f'(s).

    If ``fprime`` is not supplied the diagonal falls back to a central
    finite difference with step scaled to the argument.
    """

    def diag(s: float) -> float:
        if fprime is not None:
            return fprime(s)
        h = 1e-6 * max(abs(s), 1.0)
        return (f(s + h) - f(s - h)) / (2.0 * h)

    def evaluate(s: float, t: float) -> float:
        if abs(s - t) < _DIAG_SWITCH * max(abs(s), abs(t), 1.0):
            return diag(0.5 * (s + t))
        return (f(s) - f(t)) / (s - t)

    label = name or getattr(f, "__name__", "f")
    return TwoVariableKernel(evaluator=evaluate, name=f"quantum_derivative_of({label})")


def log_mean_divided_difference(lam: np.ndarray) -> np.ndarray:
    """Triple kernel K[i, j, c] = (LM(l_i, l_c) - LM(l_j, l_c)) / (l_i - l_j).

    This is the divided difference of the logarithmic mean in its first
    argument, evaluated against a third eigenvalue; it drives the exact
    gradient of the quadratic form rho -> <M_rho(w), w>.  Coinciding
    first arguments use the analytic partial derivative.  ``lam`` may
    carry leading batch dimensions: shape (..., n) -> (..., n, n, n).
    """
    lam = np.asarray(lam, dtype=float)
    li = lam[..., :, None, None]
    lj = lam[..., None, :, None]
    lc = lam[..., None, None, :]
    shape = np.broadcast_shapes(li.shape, lj.shape, lc.shape)
    scale = np.maximum(np.maximum(li, lj), 1e-300)
    near = np.broadcast_to(np.abs(li - lj) < 1e-7 * scale, shape)
    denom = np.where(near, 1.0, np.broadcast_to(li - lj, shape))
    lm_ic = np.broadcast_to(log_mean(li, lc), shape)
    lm_jc = np.broadcast_to(log_mean(lj, lc), shape)
    far_val = (lm_ic - lm_jc) / denom
    mid = np.broadcast_to(0.5 * (li + lj), shape)
    lcb = np.broadcast_to(lc, shape)
    pos = (mid > 0) & (lcb > 0)
    diag_val = np.where(pos, log_mean_d1(np.maximum(mid, 1e-300), np.maximum(lcb, 1e-300)), 0.0)
    return np.where(near, diag_val, far_val)
