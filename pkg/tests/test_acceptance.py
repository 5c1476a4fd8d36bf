"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS line with the measured extremes; run with
``pytest tests/test_acceptance.py -v -s`` to see them.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from ncot.bundle import (
    FiberedDensity,
    FiniteBase,
    VerticalGradient,
    disintegrated_distance,
    mean_curvature_check,
    monolithic_distance,
)
from ncot.derivation import Derivation
from ncot.entropy import entropy, entropy_dissipation
from ncot.sampling import (
    random_density,
    random_derivation,
    random_ergodic_derivation,
    random_hermitian,
    random_invertible_density,
)
from ncot.spectral import dlog_solve, mult_op
from ncot.transport import SolverConfig, solve_geodesic

from conftest import SX
from oracles import commutative_dp_distance


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_criterion_1_pedersen_round_trip():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    worst_rel = 0.0
    worst_tr = 0.0
    for n in (2, 3, 4, 6):
        for _ in range(50):
            t = random_invertible_density(rng, n, floor=0.1) * n
            s = random_hermitian(rng, n)
            x = dlog_solve(t, s)
            resid = np.linalg.norm(mult_op(t).apply(x.mat) - s) / np.linalg.norm(s)
            worst_rel = max(worst_rel, resid)
            worst_tr = max(worst_tr, abs(np.trace(t @ x.mat).real - np.trace(s).real))
    elapsed = time.monotonic() - t0
    ok = worst_rel <= 1e-9 and worst_tr <= 1e-10 and elapsed < 5.0
    _report(
        "criterion 1 (Pedersen round-trip, 200 draws)",
        ok,
        f"max rel residual {worst_rel:.3e} (tol 1e-9), max trace defect {worst_tr:.3e} (tol 1e-10), {elapsed:.2f}s",
    )


def test_criterion_2_mult_op_norm():
    t0 = time.monotonic()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        x = random_density(rng, n) * rng.uniform(0.5, 4.0)
        lam_max = float(np.linalg.eigvalsh(x)[-1])
        worst = max(worst, abs(mult_op(x).opnorm() - lam_max))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-8 and elapsed < 5.0
    _report(
        "criterion 2 (multiplication-operator norm, 100 draws)",
        ok,
        f"max |opnorm - lambda_max| {worst:.3e} (tol 1e-8), {elapsed:.2f}s",
    )


def test_criterion_3_chain_rule_key_identity():
    rng = np.random.default_rng(103)
    from ncot.kernels import DLOG
    from ncot.spectral import func_calc, schur_apply

    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        d = random_derivation(rng, n, m)
        rho = random_invertible_density(rng, n)
        g = d.grad(rho)
        glog = d.grad(func_calc(rho, np.log).mat)
        mop = mult_op(rho)
        for k in range(m):
            worst = max(worst, np.linalg.norm(glog[k] - schur_apply(rho, DLOG, g[k])))
            worst = max(worst, np.linalg.norm(mop.apply(glog[k]) - g[k]))
    ok = worst <= 1e-8
    _report(
        "criterion 3 (chain rule + key identity, 100 draws)",
        ok,
        f"max componentwise residual {worst:.3e} (tol 1e-8)",
    )


def test_criterion_4_entropy_dissipation():
    rng = np.random.default_rng(104)
    h = 1e-5
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        d = random_derivation(rng, n, 2)
        p = random_invertible_density(rng, n)
        rho = d.heat(p, 0.1)
        fd = (entropy(d.heat(p, 0.1 + h).mat) - entropy(d.heat(p, 0.1 - h).mat)) / (2 * h)
        worst = max(worst, abs(fd - entropy_dissipation(d, rho.mat)))
    ok = worst <= 1e-3
    _report(
        "criterion 4 (entropy dissipation vs finite difference, 50 draws)",
        ok,
        f"max |fd - dissipation| {worst:.3e} (tol 1e-3 at h=1e-5)",
    )


def test_criterion_5_ergodicity_positivity():
    rng = np.random.default_rng(105)
    min_eig = np.inf
    for _ in range(50):
        n = int(rng.integers(2, 4))
        d = random_ergodic_derivation(rng, n)
        p = random_density(rng, n, rank=max(1, n - 1))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(d.heat(p, 0.1).mat)[0]))
    stays_singular = True
    for _ in range(10):
        t = random_hermitian(rng, 2)
        gen = np.zeros((4, 4), dtype=complex)
        gen[:2, :2] = t
        gen[2:, 2:] = rng.uniform(0.5, 2.0) * t
        d = Derivation([gen])
        assert not d.is_ergodic()[0]
        p = np.zeros((4, 4), dtype=complex)
        p[:2, :2] = random_density(rng, 2)
        for tt in np.linspace(0.0, 1.0, 5):
            lam = np.linalg.eigvalsh(d.heat(p, tt).mat)
            stays_singular = stays_singular and lam[0] < 1e-12
    ok = min_eig > 0 and stays_singular
    _report(
        "criterion 5 (ergodic => positivity improving; non-ergodic witness)",
        ok,
        f"min eigenvalue after heat(.,0.1) across 50 ergodic draws {min_eig:.3e} > 0; "
        f"10 non-ergodic block witnesses stay singular: {stays_singular}",
    )


def test_criterion_6_metric_axioms():
    t0 = time.monotonic()
    rng = np.random.default_rng(106)
    cfg = SolverConfig(steps=16)
    worst_sym = 0.0
    worst_tri = 0.0
    for trial in range(30):
        n = 2 if trial < 20 else 3
        d = random_ergodic_derivation(rng, n)
        p, q, r = (random_density(rng, n) for _ in range(3))
        w_pq = solve_geodesic(d, p, q, cfg).distance
        w_qp = solve_geodesic(d, q, p, cfg).distance
        worst_sym = max(worst_sym, abs(w_pq - w_qp) / max(w_pq, 1e-300))
        w_pr = solve_geodesic(d, p, r, cfg).distance
        w_qr = solve_geodesic(d, q, r, cfg).distance
        worst_tri = max(worst_tri, (w_pr - w_pq - w_qr) / max(w_pr, 1e-300))
    elapsed = time.monotonic() - t0
    ok = worst_sym <= 2e-4 and worst_tri <= 3e-4 and elapsed < 120.0
    _report(
        "criterion 6 (metric axioms on 30 triples)",
        ok,
        f"max symmetry defect {worst_sym:.3e} (tol 2e-4), max triangle violation {worst_tri:.3e} "
        f"(tol 3e-4), {elapsed:.1f}s",
    )


def test_criterion_7_commutative_oracle():
    t0 = time.monotonic()
    rng = np.random.default_rng(107)
    d = Derivation([SX])
    cfg = SolverConfig(steps=16)
    worst = 0.0
    for _ in range(10):
        p1, q1 = rng.uniform(0.05, 0.95, size=2)
        p = np.diag([p1, 1 - p1]).astype(complex)
        q = np.diag([q1, 1 - q1]).astype(complex)
        got = solve_geodesic(d, p, q, cfg).distance
        oracle = commutative_dp_distance(p1, q1)
        worst = max(worst, abs(got - oracle) / oracle)
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-3 and elapsed < 120.0
    _report(
        "criterion 7 (commutative grid-DP oracle, 10 diagonal pairs)",
        ok,
        f"max relative deviation {worst:.3e} (tol 1e-3), {elapsed:.1f}s",
    )


def _random_bundle(rng, k, n):
    base = FiniteBase(weights=tuple(rng.uniform(0.5, 2.0, size=k)))
    vg = VerticalGradient(base, tuple(random_ergodic_derivation(rng, n) for _ in range(k)))
    raw = rng.uniform(0.2, 1.0, size=k)
    masses = raw / float(np.dot(base.weights, raw))
    p = FiberedDensity(base, [masses[j] * random_density(rng, n) for j in range(k)], normalize=False)
    q = FiberedDensity(base, [masses[j] * random_density(rng, n) for j in range(k)], normalize=False)
    return base, vg, p, q


def test_criterion_8_disintegration():
    t0 = time.monotonic()
    rng = np.random.default_rng(108)
    cfg = SolverConfig(steps=16)
    worst = 0.0
    flags_agree = True
    for trial in range(10):
        k = int(rng.integers(2, 5))
        base, vg, p, q = _random_bundle(rng, k, 2)
        res = disintegrated_distance(vg, p, q, cfg)
        mono = monolithic_distance(vg, p, q, cfg)
        worst = max(worst, abs(mono.energy - res.total_sq) / max(res.total_sq, 1e-300))
        if trial < 3:
            other = rng.uniform(0.2, 1.0, size=k)
            other = other / float(np.dot(base.weights, other))
            q_bad = FiberedDensity(
                base, [other[j] * random_density(rng, 2) for j in range(k)], normalize=False
            )
            res_bad = disintegrated_distance(vg, p, q_bad, cfg)
            mono_bad = monolithic_distance(vg, p, q_bad, cfg)
            flags_agree = flags_agree and (not res_bad.feasible) and (not mono_bad.feasible)
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-3 and flags_agree and elapsed < 300.0
    _report(
        "criterion 8 (disintegration vs monolithic, 10 bundles)",
        ok,
        f"max relative route disagreement {worst:.3e} (tol 1e-3), mismatch flags agree: {flags_agree}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_9_mean_curvature_bound():
    t0 = time.monotonic()
    rng = np.random.default_rng(109)
    cfg = SolverConfig(steps=16)
    all_ok = True
    margins = []
    for trial in range(5):
        k = 2 if trial < 3 else 3
        base = FiniteBase(weights=tuple(rng.uniform(0.5, 2.0, size=k)))
        vg = VerticalGradient(base, tuple(random_ergodic_derivation(rng, 2) for _ in range(k)))
        report = mean_curvature_check(vg, 20, seed=int(rng.integers(0, 10000)), config=cfg)
        all_ok = all_ok and report.bound_satisfied
        margins.append(report.mcurv_estimate - report.essinf_fiber)
    elapsed = time.monotonic() - t0
    ok = all_ok and elapsed < 600.0
    _report(
        "criterion 9 (mean curvature >= essinf fiber curvature, 5 bundles x 20 pairs)",
        ok,
        f"bound satisfied on all bundles: {all_ok}, min margin {min(margins):.3e} (tol -1e-6), {elapsed:.1f}s",
    )


def test_criterion_10_check_determinism():
    cmd = [sys.executable, "-m", "ncot.cli", "check", "all", "--seed", "7"]
    run1 = subprocess.run(cmd, capture_output=True)
    run2 = subprocess.run(cmd, capture_output=True)
    identical = run1.stdout == run2.stdout and run1.returncode == run2.returncode
    ok = identical and run1.returncode == 0
    _report(
        "criterion 10 (check-all determinism, seed 7)",
        ok,
        f"byte-identical stdout: {run1.stdout == run2.stdout}, exit {run1.returncode}",
    )
