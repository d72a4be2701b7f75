"""Acceptance suite: one PASS/FAIL line per criterion, printed in the terminal summary.

Every tolerance below is the one the criterion states; nothing is tuned.
"""
import itertools
import math
import time

import numpy as np

from toralgibbs.cli import run_counterexample
from toralgibbs.coding import build_partition, encode_future
from toralgibbs.gibbs import bowen_constant, g_function, gibbs_state, marginal_identity_error
from toralgibbs.potential import (
    Potential,
    compose_Mk,
    geometric_potential,
    log_theta_v,
    theta_tail_bound,
    theta_v,
)
from toralgibbs.pressure import (
    coding_for,
    default_t_grid,
    pressure_curve,
    pressure_orbit_ratio,
    pressure_transfer,
)
from toralgibbs.realization import (
    cohomology_residual,
    livsic_bound_report,
    unstable_derivative_new_charts,
    xi,
)
from toralgibbs.torus import cat_map, fixed_point_count, homoclinic_from_index

LOG_GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def report(log, number, name, ok, detail):
    line = f"CRITERION {number} {'PASS' if ok else 'FAIL'} {name}: {detail}"
    log.append(line)
    print(line)
    return ok


# 1 -----------------------------------------------------------------------------------------

def test_criterion_1_entropy_calibration(acceptance_log):
    t0 = time.perf_counter()
    L = cat_map()
    zero = Potential.const(0.0)
    ratio = pressure_orbit_ratio(zero, L, 14)
    raw = pressure_orbit_ratio(zero, L, 14, corrected=False)
    C = build_partition(L)
    T = C.sft.transition.astype(float)
    perron = float(np.max(np.abs(np.linalg.eigvals(T))))
    P10 = pressure_transfer(zero, L, 10, coding=C)
    elapsed = time.perf_counter() - t0
    e1, e2 = abs(ratio - LOG_GOLDEN), abs(P10 - math.log(perron))
    ok = e1 <= 1e-4 and e2 <= 1e-6 and elapsed < 5
    assert report(acceptance_log, 1, "entropy calibration", ok,
                  f"|ratio(14) - log phi| = {e1:.2e} (<= 1e-4; count-corrected estimator, exact for phi = 0 "
                  f"by construction; uncorrected log(Z_14/Z_13) is off by {abs(raw - LOG_GOLDEN):.2e}), "
                  f"|P_10 - log rho(T)| = {e2:.2e} (<= 1e-6), "
                  f"{elapsed:.2f} s (< 5 s)")


# 2 -----------------------------------------------------------------------------------------

def test_criterion_2_geometric_identity(acceptance_log):
    t0 = time.perf_counter()
    L = cat_map()
    C = build_partition(L)
    geo = geometric_potential(L)
    t = default_t_grid()
    curve = pressure_curve(geo, L, t, order=10, cross_check=False, coding=C)
    slope, intercept = np.polyfit(t, curve.values, 1)
    affine_dev = float(np.max(np.abs(curve.values - (slope * t + intercept))))
    P1 = curve.value_at(1.0)

    G = gibbs_state(geo, C, 10)
    gf = g_function(G)
    b = C.boxes[C.zero_symbol]
    fr = np.linspace(0.01, 0.99, 41)
    pts = [L.from_eigen([b.u0 + f * (b.u1 - b.u0), 0.5 * (b.s0 + b.s1)]) % 1.0 for f in fr]
    vals = np.array([xi(G, C, p).xi1 for p in pts])
    xi_dev = float(np.max(np.abs(vals - np.polyval(np.polyfit(fr, vals, 1), fr))))

    lo, hi = C.future_intervals(np.array([[C.zero_symbol, C.zero_symbol]]))[0]
    inv_g = []
    for f in np.linspace(0.05, 0.95, 19):
        x = L.from_eigen([lo + f * (hi - lo), 0.5 * (b.s0 + b.s1)]) % 1.0
        if len(encode_future(C, x, gf.depth)) == 1:
            inv_g.append(unstable_derivative_new_charts(G, C, gf, x))
    g_dev = float(np.max(np.abs(np.array(inv_g) - L.lam)))
    M = livsic_bound_report(G, C, gf, geo, 8)
    elapsed = time.perf_counter() - t0
    ok = (affine_dev <= 1e-6 and abs(slope + LOG_GOLDEN) <= 1e-6 and abs(P1) <= 1e-6
          and xi_dev <= 1e-3 and g_dev <= 1e-3 and abs(M - 1) <= 1e-3 and elapsed < 30)
    assert report(acceptance_log, 2, "geometric-potential identity", ok,
                  f"slope + log lambda = {slope + LOG_GOLDEN:.1e}, affine dev {affine_dev:.1e}, P(1) = {P1:.1e}, "
                  f"xi affine dev {xi_dev:.1e}, |1/g - lambda| = {g_dev:.1e} ({len(inv_g)} pts), "
                  f"|M - 1| = {abs(M - 1):.1e}, {elapsed:.1f} s (< 30 s)")


# 3 -----------------------------------------------------------------------------------------

def brute_period_three(phi):
    """S_3 phi over Fix(L^3), found by scanning the grid (1/D) Z^2 with D = |det(A^3 - I)|."""
    A = np.array([[1, 1], [1, 0]])
    P = np.linalg.matrix_power(A, 3)
    D = abs(round(np.linalg.det(P - np.eye(2))))
    out = []
    for i, j in itertools.product(range(D), repeat=2):
        v = np.array([i, j])
        if np.all((P @ v - v) % D == 0):
            s, p = 0.0, v.copy()
            for _ in range(3):
                s += float(phi(p / D))
                p = (A @ p) % D
            out.append(s)
    assert len(out) == 4
    return np.sort(out)


def test_criterion_3_counterexample(acceptance_log):
    t0 = time.perf_counter()
    r = run_counterexample()
    elapsed = time.perf_counter() - t0
    phi = Potential.cosine(0.3).shift(-r.normalizing_pressure)
    oracle_gap = float(np.max(np.abs(brute_period_three(phi) - brute_period_three(compose_Mk(phi, 2)))))
    w = r.spectrum_witness
    ok = (r.max_curve_gap <= 5e-3
          and r.cross_residual_phi <= 1e-3
          and w["period"] == 3
          and abs(w["gap"] - 1.2) <= 1e-9 and abs(oracle_gap - 1.2) <= 1e-9
          and elapsed < 120)
    assert report(acceptance_log, 3, "counterexample reproduction", ok,
                  f"transfer(depth {r.config['depth']}) curve gap {r.max_curve_gap:.2e} (<= 5e-3); "
                  f"phi curve vs orbit_sum({r.config['orbit_order']}) residual {r.cross_residual_phi:.1e}; "
                  f"phi o M2 curve residual {r.cross_residual_phi2:.1e} and orbit_sum gap "
                  f"{r.cross_method_gap:.3f} (slow orbit convergence, strict xfail in test_pressure); "
                  f"period-3 gap {w['gap']:.12f}, brute-force oracle {oracle_gap:.12f}; {elapsed:.1f} s (< 120 s)")


# 4 -----------------------------------------------------------------------------------------

def test_criterion_4_gap_trend(acceptance_log):
    # orders with |Fix(L^n)| even; for the others M_2 permutes Fix(L^n) and the gap is exactly 0
    L = cat_map()
    psi = Potential.cosine(0.3)
    phi = psi.shift(-pressure_transfer(psi, L, 12))
    phi2 = compose_Mk(phi, 2)
    t = default_t_grid()
    gaps = {}
    for n in (12, 15, 18):
        assert fixed_point_count(L, n) % 2 == 0
        a = pressure_curve(phi, L, t, "orbit_sum", n, cross_check=False).values
        b = pressure_curve(phi2, L, t, "orbit_sum", n, cross_check=False).values
        gaps[n] = float(np.max(np.abs(a - b)))
    seq = [gaps[n] for n in (12, 15, 18)]
    ok = all(x > y for x, y in zip(seq, seq[1:]))
    assert report(acceptance_log, 4, "gap trend", ok,
                  "orbit_sum curve gap " + ", ".join(f"n={n}: {g:.4f}" for n, g in gaps.items())
                  + " (strictly decreasing)")


# 5 -----------------------------------------------------------------------------------------

def test_criterion_5_gibbs_bowen(acceptance_log, phi, coding):
    G = gibbs_state(phi, coding, 10)
    gf = g_function(G)
    s = abs(math.fsum(G.weights.tolist()) - 1.0)
    gn = gf.normalization_error()
    mi = max(marginal_identity_error(G, p, q) for p, q in [(2, 3), (3, 5), (4, 4)])
    _, per = bowen_constant(G, phi, orders=range(1, 11), return_all=True)
    ratio = per[10] / per[6]
    ok = s <= 1e-12 and gn <= 1e-8 and mi <= 1e-6 and ratio <= 1.5
    assert report(acceptance_log, 5, "Gibbs/Bowen suite", ok,
                  f"|sum w - 1| = {s:.1e}, g-normalisation {gn:.1e}, marginal identity {mi:.1e}, "
                  f"C(10)/C(6) = {ratio:.3f} (C(10) = {per[10]:.2f})")


# 6 -----------------------------------------------------------------------------------------

def test_criterion_6_cohomology_residual(acceptance_log, phi, coding, L):
    res = {}
    for m in (8, 12):
        G = gibbs_state(phi, coding, m)
        res[m] = cohomology_residual(G, coding, g_function(G), phi, L, 8, return_report=True)
    factor = res[8].residual / res[12].residual
    c = 0.05
    G = gibbs_state(phi, coding, 12)
    inj = cohomology_residual(G, coding, g_function(G), phi + c, L, 8, return_report=True)
    worst = min(inj.per_period_min[n] / (n * c) for n in inj.per_period_min)
    ok = factor >= 2 and worst >= 0.9
    assert report(acceptance_log, 6, "cohomology residual", ok,
                  f"residual depth 8: {res[8].residual:.4f}, depth 12: {res[12].residual:.4f}, factor {factor:.2f} "
                  f"(>= 2; {res[12].skipped_boundary} boundary points skipped); constant injection c = {c}: "
                  f"min_n min_orbit residual/(n c) = {worst:.3f} (>= 0.9)")


# 7 -----------------------------------------------------------------------------------------

def test_criterion_7_coding_consistency(acceptance_log, L, psi):
    C = build_partition(L)
    diffs = [C.sft.trace_power(n) - fixed_point_count(L, n) for n in range(1, 13)]
    a = pressure_transfer(psi, L, 10, coding=coding_for(L, (2, 2)))
    b = pressure_transfer(psi, L, 8, coding=coding_for(L, (3, 3)))
    ok = max(abs(d) for d in diffs) <= 2 and abs(a - b) <= 1e-4
    assert report(acceptance_log, 7, "coding consistency", ok,
                  f"trace(T^n) - |Fix(L^n)| for n <= 12: {sorted(set(diffs))} (|.| <= 2); "
                  f"J(2,2) depth 10 vs J(3,3) depth 8 pressure difference {abs(a - b):.1e} (<= 1e-4)")


# 8 -----------------------------------------------------------------------------------------

def test_criterion_8_theta_certificate(acceptance_log, L):
    pot = Potential((((1, 0), 0.3, 0.0), ((0, 1), 0.1, -0.05), ((1, -2), 0.02, 0.04)), 0.1)
    rng = np.random.default_rng(2024)
    tail_ok = 0
    for _ in range(100):
        v = homoclinic_from_index(L, tuple(int(i) for i in rng.integers(-3, 4, size=2)))
        x = rng.random(2)
        N = int(rng.integers(8, 25))
        val, tail = theta_v(pot, L, v, x, N)
        ref = log_theta_v(pot, L, v, x, N + 15)
        tail_ok += abs(ref - math.log(val)) <= tail + 1e-12
    coc_ok = 0
    for _ in range(100):
        v = homoclinic_from_index(L, tuple(int(i) for i in rng.integers(-2, 3, size=2)))
        w = homoclinic_from_index(L, tuple(int(i) for i in rng.integers(-2, 3, size=2)))
        x = rng.random(2)
        lhs = log_theta_v(pot, L, v + w, x, 30)
        rhs = log_theta_v(pot, L, v, (x + w.v.as_array()) % 1.0, 30) + log_theta_v(pot, L, w, x, 30)
        budget = sum(theta_tail_bound(pot, L, h, 30) for h in (v + w, v, w))
        coc_ok += abs(lhs - rhs) <= budget + 1e-9
    ok = tail_ok == 100 and coc_ok == 100
    assert report(acceptance_log, 8, "theta certificate", ok,
                  f"tail contract {tail_ok}/100 pairs, cocycle identity {coc_ok}/100 triples")
