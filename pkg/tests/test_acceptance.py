"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a single ``ACCEPTANCE <n> PASS|FAIL`` line with the
measured numbers before asserting; the lines are repeated in the pytest
terminal summary. Run with ``pytest tests/test_acceptance.py -v`` or directly
as a script.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy import optimize

from mdiqss.cli import MC_GRID
from mdiqss.decoy import Q111Convention, build_gain_table, error_upper_bound, required_labels, yield_lower_bound
from mdiqss.ghz import (
    GhzOutcome,
    Polarization,
    all_patterns,
    classify_clicks,
    gain_integrals,
    ideal_projection_probs,
)
from mdiqss.keyrate import BaselineModel, baseline_sync, max_distance, rate_point, tqm_threshold
from mdiqss.montecarlo import LoopPhoton, McConfig, loop_trace, simulate_sifting, simulate_sync
from mdiqss.params import SimParams
from mdiqss.sources import ThermalSource
from mdiqss.sync import SyncModel, sync_success

DEFAULTS = SimParams()


def rel(a, b):
    return abs(a - b) / abs(b)


def ps3(L, **kw):
    return sync_success(3, SyncModel.from_params(DEFAULTS, L_km=L, **kw))


def test_criterion_1_sync_anchor(acceptance):
    t0 = time.perf_counter()
    qm = ps3(200.0)
    elapsed = time.perf_counter() - t0
    wcp = baseline_sync(BaselineModel.WCP_NOQM, DEFAULTS, 200.0)
    ok = rel(qm, 5.434e-12) <= 0.02 and rel(wcp, 1.928e-14) <= 0.10 and elapsed < 1.0
    assert acceptance(1, ok, f"Ps3(200 km)={qm:.4e} (target 5.434e-12 +-2%), WCP={wcp:.4e} (1.928e-14 +-10%), {elapsed * 1e3:.1f} ms")


def test_criterion_2_n_saturation(acceptance):
    Ls = np.arange(0.0, 301.0, 5.0)
    curves = {N: np.array([ps3(L, N=N) for L in Ls]) for N in (2, 5, 10, 40)}
    dev = {N: float(np.max(np.abs(curves[N] / curves[40] - 1))) for N in (5, 10)}
    n2_gap = float(np.max(1 - curves[2] / curves[40]))
    ok = max(dev.values()) <= 0.01 and n2_gap >= 0.05
    assert acceptance(
        2, ok,
        f"max rel. deviation from N=40: N=5 {dev[5]:.2%}, N=10 {dev[10]:.2%} (need <=1%); N=2 max gap {n2_gap:.1%} (need >=5%)",
    )


def test_criterion_3_tqm_threshold(acceptance):
    t = tqm_threshold(DEFAULTS, L_ref=200.0)
    assert acceptance(3, abs(t - 0.183) <= 0.01, f"T_QM threshold {t:.4f} (target 0.183 +-0.01)")


def _crossover(params):
    """Arm length where the memory curve overtakes the ideal heralded-source curve."""
    gap = lambda L: math.log(rate_point(params, L, "qm").R / rate_point(params, L, "hsps-ideal").R)  # noqa: E731
    return optimize.brentq(gap, 1.0, 150.0, xtol=1e-3)


def test_criterion_4_key_rate_anchor(acceptance):
    t0 = time.perf_counter()
    by_conv = {c: rate_point(DEFAULTS, 100.0, "qm", c).R for c in Q111Convention}
    per_point = (time.perf_counter() - t0) / len(by_conv)
    hits = [c for c, r in by_conv.items() if r > 0 and rel(r, 8.129e-7) <= 0.15]
    conv = hits[0] if len(hits) == 1 else Q111Convention.LITERAL
    r07 = rate_point(DEFAULTS.with_(T_QM=0.7), 100.0, "qm", conv).R
    ideal = rate_point(DEFAULTS, 100.0, "hsps-ideal", conv).R
    cross = _crossover(DEFAULTS)
    parts = {
        "single convention hits 8.129e-7": len(hits) == 1,
        "T_QM=0.7 2.025e-7": rel(r07, 2.025e-7) <= 0.15,
        "ideal 1.451e-7": rel(ideal, 1.451e-7) <= 0.15,
        "crossover 21+-5 km": abs(cross - 21.0) <= 5.0,
        "runtime < 30 s": per_point < 30.0,
    }
    detail = (
        f"R(100) literal={by_conv[Q111Convention.LITERAL]:.4e} triple={by_conv[Q111Convention.TRIPLE_THERMAL]:.4e}; "
        f"T_QM=0.7 {r07:.4e}; ideal {ideal:.4e}; crossover {cross:.1f} km; {per_point:.2f} s/point; "
        + ", ".join(f"{k}: {'ok' if v else 'no'}" for k, v in parts.items())
    )
    assert acceptance(4, all(parts.values()), detail)


def test_criterion_5_max_distances(acceptance):
    targets = [
        ("qm T_QM=0.98", BaselineModel.QM_HSPS, 0.98, 261.0, 3.0),
        ("qm T_QM=0.9", BaselineModel.QM_HSPS, 0.9, 258.0, 3.0),
        ("qm T_QM=0.8", BaselineModel.QM_HSPS, 0.8, 254.0, 3.0),
        ("qm T_QM=0.7", BaselineModel.QM_HSPS, 0.7, 250.0, 3.0),
        ("wcp", BaselineModel.WCP_NOQM, 0.98, 116.0, 5.0),
        ("hsps-nonideal", BaselineModel.HSPS_NOQM_NONIDEAL, 0.98, 248.0, 5.0),
    ]
    results = []
    for name, variant, tqm, target, tol in targets:
        km = max_distance(DEFAULTS.with_(T_QM=tqm), variant)
        results.append((name, km, target, tol, abs(km - target) <= tol))
    detail = "; ".join(f"{n} {km:.1f} km ({t:g}+-{tol:g} {'ok' if ok else 'no'})" for n, km, t, tol, ok in results)
    assert acceptance(5, all(r[-1] for r in results), detail)


@pytest.mark.slow
def test_criterion_6_monte_carlo_oracle(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for L, N, T in MC_GRID:
        p = DEFAULTS.with_(L_km=L, N=N, T_QM=T)
        est = simulate_sync(McConfig(seed=20240101, trials=10_000_000, params=p))
        worst = max(worst, abs(est.z_score(sync_success(3, SyncModel.from_params(p)))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 3.0 and elapsed < 600
    assert acceptance(6, ok, f"{len(MC_GRID)} grid points x 1e7 trials, max|z|={worst:.2f} (need <=3), {elapsed:.0f} s")


def test_criterion_7_logic_invariants(acceptance):
    succ = sum(classify_clicks(p) is not GhzOutcome.FAILURE for p in all_patterns())
    table_ok = True
    for basis in ("Z", "X"):
        for bits in itertools.product((0, 1), repeat=3):
            pols = [Polarization.encode(basis, b) for b in bits]
            got = ideal_projection_probs(pols)
            if basis == "Z":
                want = (0.5, 0.5) if len(set(bits)) == 1 else (0.0, 0.0)
            else:
                want = (1.0, 0.0) if sum(bits) % 2 == 0 else (0.0, 1.0)
            table_ok &= np.allclose((got[GhzOutcome.PHI_PLUS], got[GhzOutcome.PHI_MINUS]), want, atol=1e-12)
    flips = all(
        loop_trace(LoopPhoton(pol), r).polarization != pol for pol in "HV" for r in range(1, DEFAULTS.N + 1)
    )
    sifted = simulate_sifting(McConfig(seed=7, trials=1_000_000))
    ok = succ == 8 and table_ok and flips and sifted.z_fail == 0
    assert acceptance(
        7, ok,
        f"{succ}/64 successful patterns; table {'ok' if table_ok else 'mismatch'}; "
        f"loop flip law {'ok' if flips else 'broken'}; Z-check failures {sifted.z_fail} in 1e6 trials",
    )


def test_criterion_8_numerical_hygiene(acceptance):
    from test_decoy import random_tensors, synthetic_table

    norm_err = max(abs(ThermalSource.adaptive(mu).pmf().sum() - 1) for mu in (1e-4, 5e-4, 0.005, 0.1, 0.781, 1.0, 3.0))
    p = DEFAULTS.with_(L_km=100.0)
    eta = rate_point(p, 100.0).eta
    lv = {"m": p.mu, "w": p.omega, "o": 0.0}
    quad_err = 0.0
    for label in required_labels():
        triple = tuple(lv[c] for c in label)
        (qr, qe), n = gain_integrals(triple, eta, p.p_d, p.K, return_nodes=True)
        qr2, qe2 = gain_integrals(triple, eta, p.p_d, p.K, n_start=2 * n)
        quad_err = max(quad_err, abs(qr - qr2) / qr, abs(qe - qe2) / qe)
    rng = np.random.default_rng(8)
    violations = 0
    for _ in range(100):
        Y, EY = random_tensors(rng)
        mu = rng.uniform(0.002, 0.05)
        t = synthetic_table(Y, EY, mu, rng.uniform(0.05, 0.5) * mu)
        y = yield_lower_bound(t)
        violations += y.raw > Y[1, 1, 1] * (1 + 1e-9)
        if y.value > 0:
            violations += error_upper_bound(t, y.value).raw < EY[1, 1, 1] / Y[1, 1, 1] * (1 - 1e-9)
    ok = norm_err <= 1e-12 and quad_err <= 1e-9 and violations == 0
    assert acceptance(
        8, ok,
        f"pmf normalization error {norm_err:.1e}; node-doubling change {quad_err:.1e}; bound violations {violations}/100",
    )


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
