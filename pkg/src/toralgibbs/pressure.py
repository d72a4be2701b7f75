"""Topological pressure of potentials for toral automorphisms.

Three estimators of the same limit:

* ``orbit_sum``   -- ``(1/n) log Z_n`` with ``Z_n = sum_{L^n x = x} exp(S_n phi(x))``;
* ``orbit_ratio`` -- ``log lam + log((Z_n/F_n) / (Z_{n-1}/F_{n-1}))`` where
  ``F_n = |Fix(L^n)|``; dividing by ``F_n = |det(I - L^-n)| lam^n`` turns
  ``Z_n`` into a dynamical flat trace, whose consecutive ratios converge at the
  rate of the spectral gap (the plain ``log(Z_n/Z_{n-1})`` is available with
  ``corrected=False``);
* ``transfer_operator`` -- log of the leading eigenvalue of the depth-``m``
  transfer matrix on the Markov coding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .coding import MarkovCoding, build_partition
from .errors import GridTooCoarse, NonConvexCurve
from .gibbs import cylinder_potential, equilibrium
from .potential import Potential, periodic_birkhoff_sums
from .torus import ToralAutomorphism, eigen_data, fixed_point_count

METHODS = ("orbit_sum", "orbit_ratio", "transfer_operator")
DEFAULT_ORBIT_ORDER = 18
DEFAULT_DEPTH = 12
CONVEXITY_TOL = 1e-8


def default_t_grid(lo: float = -2.0, hi: float = 2.0, step: float = 0.05) -> np.ndarray:
    k = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(k + 1), 12)


def _logsumexp(v: np.ndarray) -> float:
    mx = float(np.max(v))
    return mx + math.log(math.fsum(np.exp(v - mx).tolist()))


@lru_cache(maxsize=32)
def _coding_for(matrix: tuple, refinement) -> MarkovCoding:
    return build_partition(eigen_data(matrix), refinement)


def coding_for(L: ToralAutomorphism, refinement=None) -> MarkovCoding:
    """Cached Markov coding of ``L`` (``refinement=None`` picks the smallest valid join)."""
    return _coding_for(((L.a, L.b), (L.c, L.d)), None if refinement is None else tuple(refinement))


# ---------------------------------------------------------------------------
# point estimators
# ---------------------------------------------------------------------------

def log_partition_sum(phi: Potential, L: ToralAutomorphism, n: int, t: float = 1.0) -> float:
    """``log Z_n(t phi)``."""
    _, _, S = periodic_birkhoff_sums(phi, L, n)
    return _logsumexp(t * S)


def pressure_orbit_sum(phi: Potential, L: ToralAutomorphism, n: int) -> float:
    """``(1/n) log sum_{Fix(L^n)} exp(S_n phi)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return log_partition_sum(phi, L, n) / n


def pressure_orbit_ratio(phi: Potential, L: ToralAutomorphism, n: int, corrected: bool = True) -> float:
    """Consecutive-ratio pressure estimate at order ``n`` (see module docstring)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    raw = log_partition_sum(phi, L, n) - log_partition_sum(phi, L, n - 1)
    if not corrected:
        return raw
    return raw + math.log(L.lam) - (math.log(fixed_point_count(L, n)) - math.log(fixed_point_count(L, n - 1)))


def pressure_transfer(phi: Potential, L: ToralAutomorphism, depth: int = DEFAULT_DEPTH,
                      coding: MarkovCoding | None = None, refinement=None) -> float:
    """Leading-eigenvalue pressure at symbolic depth ``depth``."""
    coding = coding or coding_for(L, refinement)
    psi = cylinder_potential(phi, coding, depth)
    return equilibrium(psi, coding.sft, depth).pressure


def pressure(phi: Potential, L: ToralAutomorphism, method: str = "transfer_operator", order: int | None = None) -> float:
    if method == "orbit_sum":
        return pressure_orbit_sum(phi, L, order or DEFAULT_ORBIT_ORDER)
    if method == "orbit_ratio":
        return pressure_orbit_ratio(phi, L, order or DEFAULT_ORBIT_ORDER)
    if method == "transfer_operator":
        return pressure_transfer(phi, L, order or DEFAULT_DEPTH)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

@dataclass
class PressureCurve:
    """Samples of ``t -> P(t phi)`` with provenance and a cross-method residual."""

    t_grid: np.ndarray
    values: np.ndarray
    method: str
    order: int
    potential_id: str = ""
    residual: np.ndarray | None = None
    cross_method: str | None = None
    cross_order: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("pressure values must be finite")

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual is not None else float("nan")

    def second_differences(self) -> np.ndarray:
        return self.values[2:] - 2 * self.values[1:-1] + self.values[:-2]

    def is_uniform(self) -> bool:
        d = np.diff(self.t_grid)
        return len(d) > 0 and np.allclose(d, d[0], rtol=0, atol=1e-9)

    def convexity_defect(self) -> float:
        """``max(0, -min second difference)`` on a uniform grid."""
        if len(self.values) < 3 or not self.is_uniform():
            return 0.0
        return float(max(0.0, -self.second_differences().min()))

    def value_at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.t_grid - t)))
        if abs(self.t_grid[i] - t) > 1e-9:
            raise KeyError(f"t = {t} not on the grid")
        return float(self.values[i])

    def rows(self):
        res = self.residual if self.residual is not None else np.full(len(self.values), np.nan)
        for t, p, r in zip(self.t_grid, self.values, res):
            yield float(t), float(p), self.method, self.order, float(r)

    def to_json(self) -> dict:
        return {
            "t": self.t_grid.tolist(),
            "P": self.values.tolist(),
            "method": self.method,
            "order": self.order,
            "potential_id": self.potential_id,
            "residual": None if self.residual is None else self.residual.tolist(),
            "cross_method": self.cross_method,
            "cross_order": self.cross_order,
        }


def _curve_values(phi: Potential, L: ToralAutomorphism, t_grid, method: str, order: int,
                  coding: MarkovCoding | None = None) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if method in ("orbit_sum", "orbit_ratio"):
        # Birkhoff sums of t*phi are t times those of phi: enumerate once
        _, _, Sn = periodic_birkhoff_sums(phi, L, order)
        if method == "orbit_sum":
            return np.array([_logsumexp(t * Sn) / order for t in t_grid])
        _, _, Sm = periodic_birkhoff_sums(phi, L, order - 1)
        corr = math.log(L.lam) - math.log(fixed_point_count(L, order)) + math.log(fixed_point_count(L, order - 1))
        return np.array([_logsumexp(t * Sn) - _logsumexp(t * Sm) + corr for t in t_grid])
    if method == "transfer_operator":
        coding = coding or coding_for(L)
        psi = cylinder_potential(phi, coding, order)
        return np.array([equilibrium(t * psi, coding.sft, order).pressure for t in t_grid])
    raise ValueError(f"unknown method {method!r}")


def _other(method: str):
    if method == "transfer_operator":
        return "orbit_ratio", DEFAULT_ORBIT_ORDER
    return "transfer_operator", DEFAULT_DEPTH


def pressure_curve(phi: Potential, L: ToralAutomorphism, t_grid=None, method: str = "transfer_operator",
                   order: int | None = None, cross_check: bool = True, potential_id: str = "",
                   coding: MarkovCoding | None = None, check_convexity: bool = True,
                   cross_method: str | None = None, cross_order: int | None = None) -> PressureCurve:
    """Sample ``t -> P(t phi)``; optionally attach the residual against a second method.

    The second method defaults to the orbit ratio (order 18) for transfer-operator
    curves and to the transfer operator (depth 12) otherwise.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if order is None:
        order = DEFAULT_DEPTH if method == "transfer_operator" else DEFAULT_ORBIT_ORDER
    values = _curve_values(phi, L, t_grid, method, order, coding)
    curve = PressureCurve(t_grid, values, method, order, potential_id)
    if cross_check:
        m2, o2 = _other(method)
        if cross_method is not None:
            if cross_method not in METHODS or cross_method == method:
                raise ValueError(f"cross-check method must differ from {method!r}")
            m2 = cross_method
            o2 = cross_order or (DEFAULT_DEPTH if m2 == "transfer_operator" else DEFAULT_ORBIT_ORDER)
        other = _curve_values(phi, L, t_grid, m2, o2, coding)
        curve.residual = values - other
        curve.cross_method, curve.cross_order = m2, o2
    if check_convexity and curve.convexity_defect() > CONVEXITY_TOL:
        raise NonConvexCurve(f"second difference {-curve.convexity_defect():.3e} below tolerance")
    return curve


def normalize_to_zero_pressure(phi: Potential, L: ToralAutomorphism, method: str = "transfer_operator",
                               order: int | None = None) -> Potential:
    """``phi - P(phi)``."""
    return phi.shift(-pressure(phi, L, method, order))


def lyapunov_from_pressure(curve: PressureCurve, t0: float) -> float:
    """``-(P(t0 + h) - P(t0 - h)) / 2h`` with ``h`` the grid step at ``t0``."""
    t = curve.t_grid
    i = int(np.argmin(np.abs(t - t0)))
    if abs(t[i] - t0) > 1e-9:
        raise KeyError(f"t0 = {t0} is not a grid point")
    if i == 0 or i == len(t) - 1:
        raise ValueError("t0 must be interior to the grid")
    h_left, h_right = t[i] - t[i - 1], t[i + 1] - t[i]
    if abs(h_left - h_right) > 1e-9:
        raise ValueError("grid must be locally uniform at t0")
    if h_right > 0.1:
        raise GridTooCoarse(f"grid step {h_right} > 0.1")
    return -(curve.values[i + 1] - curve.values[i - 1]) / (2 * h_right)
