"""Trigonometric-polynomial potentials on T^2 and the sums built from them."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .torus import (
    HomoclinicVector,
    ToralAutomorphism,
    TorusPoint,
    periodic_point_array,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HolderData:
    """Regularity constants: ``|phi(x)-phi(y)| <= C3 d(x,y)**alpha``; homoclinic
    decay ``C1``; ``C2 >= 1`` bounds ``|L^-n z| <= C2 lam**-n |z|`` on unstable vectors."""

    C3: float
    alpha: float
    C1: float
    C2: float


@dataclass(frozen=True)
class Potential:
    """``constant + sum_j ccos_j cos(2 pi m_j.x) + csin_j sin(2 pi m_j.x)``."""

    terms: tuple = ()
    constant: float = 0.0
    _freqs: np.ndarray = field(init=False, repr=False, compare=False)
    _ccos: np.ndarray = field(init=False, repr=False, compare=False)
    _csin: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        clean = []
        for m, cc, cs in self.terms:
            m = (int(m[0]), int(m[1]))
            if m == (0, 0):
                raise ValueError("put the zero frequency in `constant`")
            clean.append((m, float(cc), float(cs)))
        object.__setattr__(self, "terms", tuple(clean))
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "_freqs", np.array([t[0] for t in clean], dtype=np.float64).reshape(-1, 2))
        object.__setattr__(self, "_ccos", np.array([t[1] for t in clean], dtype=np.float64))
        object.__setattr__(self, "_csin", np.array([t[2] for t in clean], dtype=np.float64))

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, c: float) -> "Potential":
        return cls((), c)

    @classmethod
    def cosine(cls, eps: float, m=(1, 0)) -> "Potential":
        """``eps * cos(2 pi m.x)``."""
        return cls(((m, eps, 0.0),), 0.0)

    # -- evaluation -------------------------------------------------------
    @property
    def kernel_args(self):
        return self._freqs, self._ccos, self._csin, self.constant

    def __call__(self, x):
        if isinstance(x, TorusPoint):
            return float(_kernels.trig_eval(x.as_array(), *self.kernel_args)[0])
        arr = np.asarray(x, dtype=np.float64)
        out = _kernels.trig_eval(arr.reshape(-1, 2), *self.kernel_args)
        return out.reshape(arr.shape[:-1]) if arr.ndim > 1 else float(out[0])

    @property
    def is_constant(self) -> bool:
        return all(cc == 0.0 and cs == 0.0 for _, cc, cs in self.terms)

    @property
    def C3(self) -> float:
        """Lipschitz bound ``sum 2 pi |m| (|ccos| + |csin|)`` (Euclidean |m|)."""
        return math.fsum(TWO_PI * math.hypot(*m) * (abs(cc) + abs(cs)) for m, cc, cs in self.terms)

    @property
    def sup_norm_bound(self) -> float:
        return abs(self.constant) + math.fsum(abs(cc) + abs(cs) for _, cc, cs in self.terms)

    # -- algebra ----------------------------------------------------------
    def scale(self, t: float) -> "Potential":
        return Potential(tuple((m, t * cc, t * cs) for m, cc, cs in self.terms), t * self.constant)

    def shift(self, c: float) -> "Potential":
        return Potential(self.terms, self.constant + c)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return self.shift(other)
        acc: dict = {}
        for m, cc, cs in self.terms + other.terms:
            a, b = acc.get(m, (0.0, 0.0))
            acc[m] = (a + cc, b + cs)
        terms = tuple((m, cc, cs) for m, (cc, cs) in sorted(acc.items()) if cc != 0.0 or cs != 0.0)
        return Potential(terms, self.constant + other.constant)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Potential) else -float(other))

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "constant": self.constant,
            "terms": [{"m": list(m), "cos": cc, "sin": cs} for m, cc, cs in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Potential":
        terms = tuple(
            (tuple(t["m"]), t.get("cos", 0.0), t.get("sin", 0.0)) for t in data.get("terms", [])
        )
        return cls(terms, data.get("constant", 0.0))

    @classmethod
    def load(cls, path) -> "Potential":
        return cls.from_json(json.loads(Path(path).read_text()))


def eval_potential(phi: Potential, x) -> float:
    return phi(x)


def geometric_potential(L: ToralAutomorphism) -> Potential:
    """``-log |D_u L| = -log lam`` (constant for a linear map)."""
    return Potential.const(-math.log(L.lam))


def compose_linear(phi: Potential, M) -> Potential:
    """Exact pullback ``phi(M x)`` for an integer matrix ``M``: frequency ``m -> M^T m``."""
    M = np.asarray(M, dtype=np.int64)
    terms = []
    for m, cc, cs in phi.terms:
        mt = M.T @ np.array(m, dtype=np.int64)
        terms.append(((int(mt[0]), int(mt[1])), cc, cs))
    return Potential(tuple(terms), phi.constant)


def compose_Mk(phi: Potential, k: int) -> Potential:
    """``phi o M_k`` with ``M_k(x) = k x mod 1``; exact frequency scaling."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return compose_linear(phi, [[k, 0], [0, k]])


def coboundary(u: Potential, L: ToralAutomorphism) -> Potential:
    """``u - u o L`` (exact, as a trigonometric polynomial)."""
    return u - compose_linear(u, L.matrix)


def holder_data(phi: Potential, L: ToralAutomorphism, v: HomoclinicVector | None = None) -> HolderData:
    B = L.basis
    C2 = float(np.linalg.norm(B, 2) * np.linalg.norm(np.linalg.inv(B), 2))
    return HolderData(C3=phi.C3, alpha=1.0, C1=0.0 if v is None else v.decay_constant, C2=max(1.0, C2))


# ---------------------------------------------------------------------------
# Birkhoff sums
# ---------------------------------------------------------------------------

def birkhoff_sum(phi: Potential, L: ToralAutomorphism, x: TorusPoint, n: int) -> float:
    """``S_n phi(x)``; exact orbit for rational ``x``, compensated summation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = np.empty((n, 2))
    p = x
    for k in range(n):
        pts[k] = (float(p.x), float(p.y))
        p = L.apply(p)
    vals = _kernels.trig_eval(pts, *phi.kernel_args)
    return math.fsum(vals.tolist())


def periodic_birkhoff_sums(phi: Potential, L: ToralAutomorphism, n: int):
    """``(num, q, S_n phi)`` over all fixed points of ``L^n`` (exact orbits)."""
    num, q = periodic_point_array(L, n)
    sums = _kernels.orbit_sums(num, q, L.matrix, n, *phi.kernel_args)
    return num, q, sums


# ---------------------------------------------------------------------------
# homoclinic Radon-Nikodym cocycle
# ---------------------------------------------------------------------------

DEFAULT_THETA_TRUNCATION = 40


def theta_tail_bound(phi: Potential, L: ToralAutomorphism, v: HomoclinicVector, N: int) -> float:
    lam = L.lam
    return 2.0 * phi.C3 * v.decay_constant * lam ** (-N) / (1.0 - 1.0 / lam)


def log_theta_v(phi: Potential, L: ToralAutomorphism, v: HomoclinicVector, x, N: int = DEFAULT_THETA_TRUNCATION) -> float:
    """``sum_{|n| <= N} phi(L^n(x+v)) - phi(L^n x)`` (the log of the truncated cocycle)."""
    if N < 1:
        raise ValueError("truncation must be >= 1")
    if phi.is_constant or v.decay_constant == 0.0:
        return 0.0
    x = x.as_array() if isinstance(x, TorusPoint) else np.asarray(x, dtype=float)
    A = L.matrix.astype(float)
    det = L.a * L.d - L.b * L.c
    Ainv = np.array([[L.d, -L.b], [-L.c, L.a]], dtype=float) * det
    ys = np.empty((2 * N + 1, 2))
    ds = np.empty((2 * N + 1, 2))
    y = x % 1.0
    for k in range(0, N + 1):
        ys[N + k] = y
        ds[N + k] = v.orbit_point(k)
        y = (A @ y) % 1.0
    y = (Ainv @ (x % 1.0)) % 1.0
    for k in range(1, N + 1):
        ys[N - k] = y
        ds[N - k] = v.orbit_point(-k)
        y = (Ainv @ y) % 1.0
    f_shift = _kernels.trig_eval(ys + ds, *phi.kernel_args)
    f_base = _kernels.trig_eval(ys, *phi.kernel_args)
    return math.fsum((f_shift - f_base).tolist())


def theta_v(phi: Potential, L: ToralAutomorphism, v: HomoclinicVector, x, truncation: int = DEFAULT_THETA_TRUNCATION):
    """Truncated ``theta_v(x)`` and a bound on the omitted log-tail.

    Returns ``(value, tail_bound)`` with ``value = exp(log_theta_v)``.
    """
    if phi.is_constant or v.decay_constant == 0.0:
        return 1.0, 0.0
    return math.exp(log_theta_v(phi, L, v, x, truncation)), theta_tail_bound(phi, L, v, truncation)
