"""Measure-defined charts on the distinguished rectangle ``A_0`` and the
derivative of the automorphism in them.

``xi_1(x)`` is the equilibrium measure of the part of ``A_0`` to the left of
the local stable leaf of ``x``, and ``xi_2(x)`` the measure below its local
unstable leaf.  In these coordinates the unstable derivative of ``L`` at a
point with future code ``omega+`` is ``1 / g(omega+)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coding import GEOM_TOL, Box, MarkovCoding, encode_future, locate
from .errors import BoundaryCode, OutsideA0
from .gibbs import GFunction, GibbsApproximation, center_birkhoff_sums, product_density_table
from .potential import Potential, log_theta_v, periodic_birkhoff_sums
from .torus import HomoclinicVector, ToralAutomorphism, TorusPoint, homoclinic_from_index


@dataclass(frozen=True)
class ChartImage:
    """``xi(x) = (xi1, xi2)`` with a bound on the unresolved cylinder mass."""

    xi1: float
    xi2: float
    source_point: TorusPoint
    depth: int
    error_radius: float
    error_radius_1: float = 0.0
    error_radius_2: float = 0.0


# ---------------------------------------------------------------------------
# xi coordinates
# ---------------------------------------------------------------------------

@dataclass
class _Strips:
    lo: np.ndarray
    hi: np.ndarray
    weight: np.ndarray
    cum: np.ndarray  # cum[k] = sum of weights of strips 0..k-1

    @classmethod
    def build(cls, intervals: np.ndarray, weights: np.ndarray) -> "_Strips":
        order = np.argsort(intervals[:, 0], kind="stable")
        lo, hi, w = intervals[order, 0], intervals[order, 1], weights[order]
        cum = np.concatenate([[0.0], np.cumsum(w)])
        return cls(lo, hi, w, cum)

    def measure_below(self, t: float):
        """Interpolated measure of strips left of ``t`` and the straddle bound."""
        k = int(np.searchsorted(self.hi, t, side="right"))
        if k >= len(self.lo):
            return float(self.cum[-1]), 0.0
        if t <= self.lo[k]:
            return float(self.cum[k]), 0.0
        frac = (t - self.lo[k]) / (self.hi[k] - self.lo[k])
        w = float(self.weight[k])
        return float(self.cum[k] + frac * w), max(frac, 1.0 - frac) * w


def _strips(G: GibbsApproximation, coding: MarkovCoding):
    cache = G.__dict__.setdefault("_xi_cache", {})
    key = id(coding)
    if key not in cache:
        zero = coding.zero_symbol
        W, w = G.words, G.weights
        fut = W[:, 0] == zero
        pst = W[:, -1] == zero
        cache[key] = (
            _Strips.build(coding.future_intervals(W[fut]), w[fut]),
            _Strips.build(coding.past_intervals(W[pst]), w[pst]),
        )
    return cache[key]


def a0_lift(coding: MarkovCoding, x, interior_tol: float = GEOM_TOL) -> np.ndarray:
    """Eigen-coordinates of the lift of ``x`` in ``A_0``; raises :class:`OutsideA0`."""
    zero = coding.zero_symbol
    box = coding.boxes[zero]
    for a, us in locate(coding, x, 0.0):
        if a == zero and box.contains(us[0], us[1], -interior_tol):
            return us
    raise OutsideA0("point is not in the interior of A_0")


def xi(G: GibbsApproximation, coding: MarkovCoding | None, x) -> ChartImage:
    """Measure coordinates of ``x`` in ``A_0`` at the resolution of ``G``."""
    coding = coding or G.coding
    us = a0_lift(coding, x)
    fut, pst = _strips(G, coding)
    x1, e1 = fut.measure_below(us[0])
    x2, e2 = pst.measure_below(us[1])
    p = x if isinstance(x, TorusPoint) else TorusPoint(float(x[0]), float(x[1]))
    return ChartImage(x1, x2, p, G.depth, max(e1, e2), e1, e2)


def xi_from_eigen(G: GibbsApproximation, coding: MarkovCoding, u: float, s: float | None = None):
    """``(xi1, err1)`` (and ``(xi2, err2)`` if ``s`` given) from eigen-coordinates in ``A_0``."""
    fut, pst = _strips(G, coding)
    out = fut.measure_below(u)
    return out if s is None else (out, pst.measure_below(s))


def strip_measure(G: GibbsApproximation, coding: MarkovCoding, u_a: float, u_b: float) -> float:
    """Measure of the strip of ``A_0`` between the stable leaves at ``u_a < u_b``,
    summed over whole depth-``m`` cylinders with fractional end pieces."""
    zero = coding.zero_symbol
    W = G.words[G.words[:, 0] == zero]
    w = G.weights[G.words[:, 0] == zero]
    I = coding.future_intervals(W)
    overlap = np.clip(np.minimum(I[:, 1], u_b) - np.maximum(I[:, 0], u_a), 0.0, None)
    return float(np.sum(w * overlap / (I[:, 1] - I[:, 0])))


# ---------------------------------------------------------------------------
# unstable derivative
# ---------------------------------------------------------------------------

def _unique_future(coding: MarkovCoding, x, depth: int) -> tuple:
    codes = encode_future(coding, x, depth)
    if len(codes) != 1:
        raise BoundaryCode(f"{len(codes)} future codes at depth {depth}")
    return codes[0]


def unstable_derivative_new_charts(G: GibbsApproximation, coding: MarkovCoding | None,
                                   gf: GFunction, x) -> float:
    """``1 / g`` at the future code of ``x`` (``x`` in the interior of ``A_0 ∩ L^-1 A_0``)."""
    coding = coding or G.coding
    a0_lift(coding, x)
    code = _unique_future(coding, x, gf.depth)
    if code[1] != coding.zero_symbol:
        raise OutsideA0("L(x) is not in A_0")
    return float(1.0 / gf(np.array([code]))[0])


def derivative_product(gf: GFunction, code, n: int) -> float:
    """``prod_{j<n} 1/g(sigma^j code)``; ``code`` needs ``n + gf.depth - 1`` symbols."""
    code = np.asarray(code, dtype=np.int64)
    rows = np.stack([code[j:j + gf.depth] for j in range(n)])
    return float(math.exp(-np.sum(gf.log_g(rows))))


def difference_quotients(G: GibbsApproximation, coding: MarkovCoding, x, separations) -> list:
    """``(xi1(L x') - xi1(L x)) / (xi1(x') - xi1(x))`` for ``x' = x + h e_u``.

    Entries are ``None`` where the change in ``xi1`` does not exceed ten times
    the combined error radii.
    """
    L = coding.L
    us = a0_lift(coding, x)
    zero = coding.zero_symbol
    nu = coding.jumps_eigen[zero, zero, 0]
    out = []
    for h in separations:
        u0, u1 = us[0], us[0] + h
        (a, ea), (b, eb) = xi_from_eigen(G, coding, u0), xi_from_eigen(G, coding, u1)
        (c, ec), (d, ed) = xi_from_eigen(G, coding, L.mu_u * u0 - nu), xi_from_eigen(G, coding, L.mu_u * u1 - nu)
        den, num = b - a, d - c
        if abs(den) <= 10 * (ea + eb) or abs(num) <= 10 * (ec + ed):
            out.append(None)
        else:
            out.append(num / den)
    return out


# ---------------------------------------------------------------------------
# canonical extension of finite words
# ---------------------------------------------------------------------------

def extend_by_centre(coding: MarkovCoding, words: np.ndarray, extra: int) -> np.ndarray:
    """Append the next ``extra`` symbols of the centre point of each one-sided cylinder."""
    W = np.atleast_2d(np.asarray(words, dtype=np.int64))
    if extra == 0:
        return W
    L = coding.L
    U = coding.u_bounds
    u = coding.future_intervals(W).mean(axis=1)
    for j in range(W.shape[1] - 1):
        u = L.mu_u * u - coding.jumps_eigen[W[:, j], W[:, j + 1], 0]
    cols = [W]
    last = W[:, -1]
    T = coding.sft.transition
    for _ in range(extra):
        nxt = np.full(len(u), -1, dtype=np.int64)
        unew = np.empty_like(u)
        for b in range(coding.alphabet_size):
            cand = L.mu_u * u - coding.jumps_eigen[last, b, 0]
            ok = T[last, b] & (cand >= U[b, 0]) & (cand <= U[b, 1]) & (nxt < 0)
            nxt[ok] = b
            unew[ok] = cand[ok]
        if np.any(nxt < 0):
            raise BoundaryCode("centre orbit left the partition")
        cols.append(nxt[:, None])
        last, u = nxt, unew
    return np.hstack(cols)


# ---------------------------------------------------------------------------
# Livsic bound and cohomology residual
# ---------------------------------------------------------------------------

@dataclass
class LivsicReport:
    M: float
    per_n: dict = field(default_factory=dict)
    words_scanned: int = 0


def livsic_bound_report(G: GibbsApproximation, coding: MarkovCoding | None, gf: GFunction,
                        phi: Potential, n_max: int, return_report: bool = False):
    """``max max(Pi, 1/Pi)`` with ``Pi = prod 1/g * exp(S_n phi)`` over words ``[0 a_1 .. a_{n-1} 0]``."""
    coding = coding or G.coding
    if n_max > G.depth - 2:
        raise ValueError("n_max must be <= depth - 2")
    zero = coding.zero_symbol
    per_n = {}
    scanned = 0
    for n in range(1, n_max + 1):
        W = coding.sft.words(n + 1)
        W = W[(W[:, 0] == zero) & (W[:, -1] == zero)]
        if len(W) == 0:
            continue
        X = extend_by_centre(coding, W, gf.depth - 2)
        logg = np.zeros(len(W))
        for j in range(n):
            logg += gf.log_g(X[:, j:j + gf.depth])
        S = center_birkhoff_sums(phi, coding, W[:, :n])
        log_pi = -logg + S
        per_n[n] = float(math.exp(np.max(np.abs(log_pi))))
        scanned += len(W)
    running, M = {}, 1.0
    for n in sorted(per_n):
        M = max(M, per_n[n])
        running[n] = M
    rep = LivsicReport(M, running, scanned)
    return rep if return_report else M


@dataclass
class ResidualReport:
    residual: float
    per_period: dict
    skipped_boundary: int
    orbits_used: int
    per_period_min: dict = field(default_factory=dict)


def cohomology_residual(G: GibbsApproximation, coding: MarkovCoding | None, gf: GFunction,
                        phi: Potential, L: ToralAutomorphism, N: int, return_report: bool = False):
    """``max |sum_orbit log(1/g) + S_n phi|`` over periodic points of period ``n <= N``.

    Points with an ambiguous code (on the partition boundary) are skipped and
    counted.
    """
    coding = coding or G.coding
    if N > 12:
        raise ValueError("N must be <= 12")
    per_period, per_period_min = {}, {}
    skipped = used = 0
    for n in range(1, N + 1):
        num, q, S = periodic_birkhoff_sums(phi, L, n)
        worst, best = 0.0, math.inf
        for i in range(len(num)):
            p = num[i].astype(np.int64)
            total_logg = 0.0
            ok = True
            for _ in range(n):
                x = p / q
                codes = encode_future(coding, x, gf.depth)
                if len(codes) != 1:
                    ok = False
                    break
                total_logg += float(gf.log_g(np.array([codes[0]]))[0])
                p = (L.matrix @ p) % q
            if not ok:
                skipped += 1
                continue
            used += 1
            r = abs(-total_logg + float(S[i]))
            worst, best = max(worst, r), min(best, r)
        per_period[n] = worst
        if best < math.inf:
            per_period_min[n] = best
    res = max(per_period.values()) if per_period else 0.0
    rep = ResidualReport(float(res), per_period, skipped, used, per_period_min)
    return rep if return_report else res


# ---------------------------------------------------------------------------
# further consistency quantities
# ---------------------------------------------------------------------------

def unstable_homoclinic_in_a0(coding: MarkovCoding, max_fraction: float = 0.5, search: int = 40) -> HomoclinicVector:
    """A homoclinic ``v`` whose lift is parallel to ``e_u`` and shorter than ``max_fraction``
    of the width of ``A_0`` (lattice vectors nearly parallel to ``e_s``)."""
    L = coding.L
    width = coding.boxes[coding.zero_symbol].width_u
    best = None
    for i in range(-search, search + 1):
        for j in range(-search, search + 1):
            if (i, j) == (0, 0):
                continue
            a, _ = L.to_eigen(np.array([i, j], dtype=float))
            if 0 < a < max_fraction * width:
                cand = homoclinic_from_index(L, (i, j))
                if best is None or cand.decay_constant < best.decay_constant:
                    best = cand
    if best is None:
        raise ValueError("no short unstable homoclinic vector found")
    return best


def ell_via_theta(G: GibbsApproximation, coding: MarkovCoding, phi: Potential, v: HomoclinicVector,
                  future_word, past: int, truncation: int = 40) -> float:
    """``int rho(zeta- omega+) theta_v(pi(zeta- omega+)) d nu-(zeta-)``.

    ``future_word`` starts with the zero symbol; ``pi`` is the centre of the
    two-sided cylinder ``zeta- omega+``.
    """
    L = coding.L
    fw = np.asarray(future_word, dtype=np.int64)
    W, rho, num, _ = product_density_table(G, past, len(fw))
    sel = np.all(W[:, past:] == fw[None, :], axis=1)
    W, rho, num = W[sel], rho[sel], num[sel]
    I = coding.future_intervals(W[:, past:])
    J = coding.past_intervals(W[:, : past + 1])
    centres = L.from_eigen(np.stack([I.mean(axis=1), J.mean(axis=1)], axis=1)) % 1.0
    # pi(zeta) + v must be computed with the lift of v parallel to e_u
    vals = np.array([math.exp(log_theta_v(phi, L, v, c, truncation)) for c in centres])
    return float(np.sum(rho * vals * num))


def chart_difference_quotient(G: GibbsApproximation, coding: MarkovCoding, v: HomoclinicVector,
                              x, h: float):
    """``(xi1(x' + v) - xi1(x + v)) / (xi1(x') - xi1(x))`` with ``x' = x + h e_u``
    (``v`` parallel to ``e_u``, all four points in ``A_0``); ``None`` if unresolved.

    ``theta_v`` is only Holder along ``e_u`` (its early terms oscillate with
    amplitude ``~ |b|``), so this quotient approaches ``ell`` slowly; the
    integrated form :func:`translated_strip_check` is the sharper test.
    """
    us = a0_lift(coding, x)
    a = v.a  # unstable-lift length of v
    (p, ep), (q, eq) = xi_from_eigen(G, coding, us[0]), xi_from_eigen(G, coding, us[0] + h)
    (r, er), (s, es) = xi_from_eigen(G, coding, us[0] + a), xi_from_eigen(G, coding, us[0] + a + h)
    den, num = q - p, s - r
    if abs(den) <= 10 * (ep + eq) or abs(num) <= 10 * (er + es):
        return None
    return num / den


def translated_strip_check(G: GibbsApproximation, coding: MarkovCoding, phi: Potential,
                           v: HomoclinicVector, u_a: float, u_b: float, past: int = 3,
                           future: int = 10, truncation: int = 30):
    """Both sides of ``xi1(. + v)`` difference ``= int ell dxi1`` over ``[u_a, u_b]``.

    Left: ``sum nu(C) theta_v(centre C)`` over two-sided cylinders of the strip
    (fractional overlaps), i.e. ``int_strip ell dxi1`` summed fibrewise.  Right:
    the measure of the translated strip ``[u_a + a, u_b + a]``.
    """
    L = coding.L
    zero = coding.zero_symbol
    W = G.sft.words(past + future)
    W = W[W[:, past] == zero]
    I = coding.future_intervals(W[:, past:])
    ov = np.clip(np.minimum(I[:, 1], u_b) - np.maximum(I[:, 0], u_a), 0.0, None) / (I[:, 1] - I[:, 0])
    keep = ov > 0
    W, I, ov = W[keep], I[keep], ov[keep]
    J = coding.past_intervals(W[:, : past + 1])
    centres = L.from_eigen(np.stack([I.mean(axis=1), J.mean(axis=1)], axis=1)) % 1.0
    th = np.exp([log_theta_v(phi, L, v, c, truncation) for c in centres])
    lhs = float(np.sum(G.cylinder_weights(W) * ov * th))
    rhs = strip_measure(G, coding, u_a + v.a, u_b + v.a)
    return lhs, rhs


def box_measure(G: GibbsApproximation, coding: MarkovCoding, box: Box, past: int, future: int) -> float:
    """``mu(box)`` for a box inside the lift of ``A_0``, from two-sided cylinders
    ``[w_-past .. w_0 = 0 .. w_future-1]`` with fractional overlaps."""
    zero = coding.zero_symbol
    W = G.sft.words(past + future)
    W = W[W[:, past] == zero]
    I = coding.future_intervals(W[:, past:])
    J = coding.past_intervals(W[:, : past + 1])
    w = G.cylinder_weights(W)
    ou = np.clip(np.minimum(I[:, 1], box.u1) - np.maximum(I[:, 0], box.u0), 0.0, None) / (I[:, 1] - I[:, 0])
    os_ = np.clip(np.minimum(J[:, 1], box.s1) - np.maximum(J[:, 0], box.s0), 0.0, None) / (J[:, 1] - J[:, 0])
    return float(np.sum(w * ou * os_))


def expansion_check(G: GibbsApproximation, coding: MarkovCoding, gf: GFunction, samples: int = 200,
                    seed: int = 0, n_max: int = 30):
    """Smallest ``n`` with ``min_x prod_{j<n} 1/g(sigma^j x) > 2`` over random ``x`` in ``A_0``.

    Returns ``(n, min_product)``.
    """
    rng = np.random.default_rng(seed)
    box = coding.boxes[coding.zero_symbol]
    L = coding.L
    codes = []
    while len(codes) < samples:
        u = box.u0 + (box.u1 - box.u0) * rng.uniform(0.01, 0.99)
        s = box.s0 + (box.s1 - box.s0) * rng.uniform(0.01, 0.99)
        x = L.from_eigen([u, s]) % 1.0
        c = encode_future(coding, x, n_max + gf.depth)
        if len(c) == 1:
            codes.append(c[0])
    C = np.array(codes, dtype=np.int64)
    logs = np.zeros(len(C))
    for n in range(1, n_max + 1):
        logs += -gf.log_g(C[:, n - 1:n - 1 + gf.depth])
        if np.min(logs) > math.log(2.0):
            return n, float(math.exp(np.min(logs)))
    return None, float(math.exp(np.min(logs)))
