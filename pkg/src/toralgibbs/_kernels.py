"""Hot numeric loops, each in a numba and a pure-numpy flavour.

The backend is chosen once from the ``TORALGIBBS_BACKEND`` environment variable
(``numba`` or ``numpy``; default ``numba`` when it imports) and can be switched
at runtime with :func:`set_backend`.  Both flavours must agree to round-off;
``tests/test_kernels.py`` runs them side by side.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

TWO_PI = 2.0 * math.pi

_BACKEND = os.environ.get("TORALGIBBS_BACKEND", "numba" if HAVE_NUMBA else "numpy").lower()
if _BACKEND not in ("numba", "numpy") or (_BACKEND == "numba" and not HAVE_NUMBA):
    _BACKEND = "numpy"


def backend() -> str:
    return _BACKEND


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _BACKEND
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    prev, _BACKEND = _BACKEND, name
    return prev


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _trig_eval_np(pts, freqs, ccos, csin, const):
    if freqs.shape[0] == 0:
        return np.full(pts.shape[0], const)
    phase = TWO_PI * (pts @ freqs.T)
    return np.cos(phase) @ ccos + np.sin(phase) @ csin + const


def _orbit_sums_np(num, q, A, n, freqs, ccos, csin, const):
    cur = num.astype(np.int64, copy=True)
    total = np.zeros(cur.shape[0])
    comp = np.zeros(cur.shape[0])
    for _ in range(n):
        val = _trig_eval_np(cur / q, freqs, ccos, csin, const)
        # Kahan step, so the result does not depend on how points are batched
        y = val - comp
        t = total + y
        comp = (t - total) - y
        total = t
        cur = (cur @ A.T) % q
    return total


def _stable_diff_sums_np(y, d, A, mu_s, N, freqs, ccos, csin, const):
    cur = y.copy()
    total = np.zeros(y.shape[0])
    scale = 1.0
    for _ in range(N):
        delta = d * scale
        total += _trig_eval_np(cur, freqs, ccos, csin, const) - _trig_eval_np(
            cur + delta, freqs, ccos, csin, const
        )
        cur = (cur @ A.T) % 1.0
        scale *= mu_s
    return total


def _power_iteration_np(indptr, indices, w, tol, maxiter):
    n = w.shape[0]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    r = np.full(n, 1.0 / n)
    l = np.full(n, 1.0 / n)
    rho = 0.0
    for it in range(1, maxiter + 1):
        r_new = w * np.add.reduceat(r[indices], indptr[:-1])
        l_new = np.bincount(indices, weights=(l * w)[rows], minlength=n)
        rho_r = r_new.sum()
        rho_l = l_new.sum()
        r_new /= rho_r
        l_new /= rho_l
        dr = np.max(np.abs(r_new - r)) / np.max(r_new)
        dl = np.max(np.abs(l_new - l)) / np.max(l_new)
        drho = abs(rho_r - rho) / rho_r
        r, l, rho = r_new, l_new, rho_r
        if dr < tol and dl < tol and drho < tol:
            return rho, r, l, it
    return rho, r, l, -1


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _trig_point(x0, x1, freqs, ccos, csin, const):
        acc = const
        for t in range(freqs.shape[0]):
            ph = TWO_PI * (freqs[t, 0] * x0 + freqs[t, 1] * x1)
            acc += ccos[t] * math.cos(ph) + csin[t] * math.sin(ph)
        return acc

    @njit(cache=True)
    def _trig_eval_nb(pts, freqs, ccos, csin, const):
        out = np.empty(pts.shape[0])
        for i in range(pts.shape[0]):
            out[i] = _trig_point(pts[i, 0], pts[i, 1], freqs, ccos, csin, const)
        return out

    @njit(cache=True)
    def _orbit_sums_nb(num, q, A, n, freqs, ccos, csin, const):
        out = np.empty(num.shape[0])
        for i in range(num.shape[0]):
            p0 = num[i, 0]
            p1 = num[i, 1]
            total = 0.0
            comp = 0.0
            for _ in range(n):
                val = _trig_point(p0 / q, p1 / q, freqs, ccos, csin, const)
                y = val - comp
                t = total + y
                comp = (t - total) - y
                total = t
                n0 = (A[0, 0] * p0 + A[0, 1] * p1) % q
                n1 = (A[1, 0] * p0 + A[1, 1] * p1) % q
                p0 = n0
                p1 = n1
            out[i] = total
        return out

    @njit(cache=True)
    def _stable_diff_sums_nb(y, d, A, mu_s, N, freqs, ccos, csin, const):
        out = np.empty(y.shape[0])
        for i in range(y.shape[0]):
            c0 = y[i, 0]
            c1 = y[i, 1]
            scale = 1.0
            total = 0.0
            for _ in range(N):
                d0 = d[i, 0] * scale
                d1 = d[i, 1] * scale
                total += _trig_point(c0, c1, freqs, ccos, csin, const) - _trig_point(
                    c0 + d0, c1 + d1, freqs, ccos, csin, const
                )
                n0 = (A[0, 0] * c0 + A[0, 1] * c1) % 1.0
                n1 = (A[1, 0] * c0 + A[1, 1] * c1) % 1.0
                c0 = n0
                c1 = n1
                scale *= mu_s
            out[i] = total
        return out

    @njit(cache=True)
    def _power_iteration_nb(indptr, indices, w, tol, maxiter):
        n = w.shape[0]
        r = np.full(n, 1.0 / n)
        l = np.full(n, 1.0 / n)
        r_new = np.empty(n)
        l_new = np.empty(n)
        rho = 0.0
        for it in range(1, maxiter + 1):
            l_new[:] = 0.0
            for i in range(n):
                acc = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    acc += r[indices[k]]
                    l_new[indices[k]] += l[i] * w[i]
                r_new[i] = w[i] * acc
            rho_r = r_new.sum()
            rho_l = l_new.sum()
            dr = 0.0
            dl = 0.0
            mr = 0.0
            ml = 0.0
            for i in range(n):
                a = r_new[i] / rho_r
                b = l_new[i] / rho_l
                dr = max(dr, abs(a - r[i]))
                dl = max(dl, abs(b - l[i]))
                mr = max(mr, a)
                ml = max(ml, b)
                r[i] = a
                l[i] = b
            drho = abs(rho_r - rho) / rho_r
            rho = rho_r
            if dr / mr < tol and dl / ml < tol and drho < tol:
                return rho, r, l, it
        return rho, r, l, -1


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _pick(np_fn, nb_name):
    if _BACKEND == "numba":
        return globals()[nb_name]
    return np_fn


def trig_eval(pts, freqs, ccos, csin, const):
    """Evaluate a real trigonometric polynomial at rows of ``pts``."""
    pts = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    return _pick(_trig_eval_np, "_trig_eval_nb")(pts, freqs, ccos, csin, float(const))


def orbit_sums(num, q, A, n, freqs, ccos, csin, const):
    """Birkhoff sums of length ``n`` along exact orbits of points ``num / q``."""
    num = np.ascontiguousarray(num, dtype=np.int64).reshape(-1, 2)
    A = np.ascontiguousarray(A, dtype=np.int64)
    return _pick(_orbit_sums_np, "_orbit_sums_nb")(
        num, np.int64(q), A, int(n), freqs, ccos, csin, float(const)
    )


def stable_diff_sums(y, d, A, mu_s, N, freqs, ccos, csin, const):
    """``sum_{n<N} phi(L^n y) - phi(L^n y + mu_s^n d)`` for stable offsets ``d``."""
    y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1, 2)
    d = np.ascontiguousarray(d, dtype=np.float64).reshape(-1, 2)
    A = np.ascontiguousarray(A, dtype=np.float64)
    return _pick(_stable_diff_sums_np, "_stable_diff_sums_nb")(
        y, d, A, float(mu_s), int(N), freqs, ccos, csin, float(const)
    )


def power_iteration(indptr, indices, w, tol=1e-12, maxiter=100_000):
    """Leading eigen-triple of ``diag(w) @ B`` with ``B`` the 0/1 CSR pattern.

    Returns ``(rho, right, left, iterations)``; ``iterations == -1`` means no
    convergence.  Vectors are normalised to unit sum.
    """
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _pick(_power_iteration_np, "_power_iteration_nb")(
        indptr, indices, w, float(tol), int(maxiter)
    )
