"""Hyperbolic automorphisms of the 2-torus.

Eigen-data, exact periodic points (via a 2x2 Smith normal form), points
homoclinic to the origin, the multiplication-by-k endomorphism and the
stable/unstable bracket decomposition of a homoclinic translation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import DegeneratePeriod, NonHyperbolic, NonUnimodular

EIGEN_TOL = 1e-12


# ---------------------------------------------------------------------------
# automorphism
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToralAutomorphism:
    """Integer matrix ``[[a, b], [c, d]]`` acting on R^2/Z^2 with its eigen-data.

    ``mu_u`` / ``mu_s`` are the signed eigenvalues (``|mu_u| = lam > 1``) for the
    unit eigenvectors ``e_u`` / ``e_s``.  Eigen-coordinates ``(u, s)`` of a
    vector ``z`` are defined by ``z = u*e_u + s*e_s``.
    """

    a: int
    b: int
    c: int
    d: int
    lam: float
    e_u: tuple[float, float]
    e_s: tuple[float, float]
    det_sign: int
    mu_u: float
    mu_s: float
    _basis_inv: np.ndarray = field(repr=False, compare=False, hash=False, default=None)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def basis(self) -> np.ndarray:
        """Columns ``e_u``, ``e_s``."""
        return np.array([[self.e_u[0], self.e_s[0]], [self.e_u[1], self.e_s[1]]])

    @property
    def h_top(self) -> float:
        return math.log(self.lam)

    def to_eigen(self, z) -> np.ndarray:
        """Eigen-coordinates of vector(s) ``z`` (shape ``(2,)`` or ``(K, 2)``)."""
        z = np.asarray(z, dtype=float)
        return z @ self._basis_inv.T

    def from_eigen(self, us) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        return us @ self.basis.T

    def apply(self, p: "TorusPoint") -> "TorusPoint":
        return TorusPoint(self.a * p.x + self.b * p.y, self.c * p.x + self.d * p.y)

    def power_matrix(self, n: int) -> list[list[int]]:
        """Exact ``A**n`` (``n >= 0``) as nested Python ints."""
        return _mat_pow([[self.a, self.b], [self.c, self.d]], n)

    def to_json(self) -> dict:
        return {"matrix": [[self.a, self.b], [self.c, self.d]]}


def _mat_mul(X, Y):
    return [
        [X[0][0] * Y[0][0] + X[0][1] * Y[1][0], X[0][0] * Y[0][1] + X[0][1] * Y[1][1]],
        [X[1][0] * Y[0][0] + X[1][1] * Y[1][0], X[1][0] * Y[0][1] + X[1][1] * Y[1][1]],
    ]


def _mat_pow(M, n):
    R = [[1, 0], [0, 1]]
    B = [row[:] for row in M]
    while n:
        if n & 1:
            R = _mat_mul(R, B)
        B = _mat_mul(B, B)
        n >>= 1
    return R


def _unit_eigvec(a, b, c, d, mu):
    # (A - mu I) v = 0; take the better-conditioned of the two row-derived kernels
    v1 = np.array([b, mu - a], dtype=float)
    v2 = np.array([mu - d, c], dtype=float)
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    v = v / np.linalg.norm(v)
    # canonical sign: first nonzero component positive
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return v


def eigen_data(matrix: Sequence[Sequence[int]]) -> ToralAutomorphism:
    """Validate an integer 2x2 matrix and compute its hyperbolic eigen-data.

    Determinant ``-1`` is admitted (the golden-mean cat map has it).
    """
    arr = np.asarray(matrix)
    if arr.shape != (2, 2):
        raise ValueError("matrix must be 2x2")
    entries = []
    for val in arr.ravel().tolist():
        if isinstance(val, float):
            if not val.is_integer():
                raise ValueError(f"non-integer entry {val!r}")
            val = int(val)
        entries.append(int(val))
    a, b, c, d = entries
    det = a * d - b * c
    if abs(det) != 1:
        raise NonUnimodular(f"|det| = {abs(det)} != 1")
    tr = a + d
    disc = tr * tr - 4 * det
    if disc <= 0:
        raise NonHyperbolic(f"complex or repeated eigenvalues (trace {tr}, det {det})")
    root = math.sqrt(disc)
    mu_u = (tr + math.copysign(root, tr)) / 2.0 if tr != 0 else root / 2.0
    mu_s = det / mu_u
    lam = abs(mu_u)
    if abs(lam - 1.0) <= EIGEN_TOL or abs(abs(mu_s) - 1.0) <= EIGEN_TOL:
        raise NonHyperbolic("eigenvalue on the unit circle")
    e_u = _unit_eigvec(a, b, c, d, mu_u)
    e_s = _unit_eigvec(a, b, c, d, mu_s)
    A = np.array([[a, b], [c, d]], dtype=float)
    if np.max(np.abs(A @ e_u - mu_u * e_u)) > EIGEN_TOL * max(1.0, lam) * 10:
        raise NonHyperbolic("unstable eigenvector residual too large")
    if np.max(np.abs(A @ e_s - mu_s * e_s)) > EIGEN_TOL * max(1.0, lam) * 10:
        raise NonHyperbolic("stable eigenvector residual too large")
    basis = np.column_stack([e_u, e_s])
    return ToralAutomorphism(
        a=a, b=b, c=c, d=d, lam=lam,
        e_u=(float(e_u[0]), float(e_u[1])), e_s=(float(e_s[0]), float(e_s[1])),
        det_sign=1 if det > 0 else -1, mu_u=mu_u, mu_s=mu_s,
        _basis_inv=np.linalg.inv(basis),
    )


CAT_MAP = ((1, 1), (1, 0))
SNAP_TOL = 1e-12


def cat_map() -> ToralAutomorphism:
    """The golden-mean automorphism ``[[1, 1], [1, 0]]``."""
    return eigen_data(CAT_MAP)


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

def _reduce(v):
    if isinstance(v, Fraction):
        return v - (v.numerator // v.denominator)
    if isinstance(v, int):
        return Fraction(0)
    r = float(v) % 1.0
    return 0.0 if r == 1.0 else r


@dataclass(frozen=True)
class TorusPoint:
    """A point of T^2, reduced into [0, 1)^2; exact if both coordinates are Fractions."""

    x: Fraction | float
    y: Fraction | float

    def __post_init__(self):
        x, y = self.x, self.y
        if isinstance(x, int) and not isinstance(x, bool):
            x = Fraction(x)
        if isinstance(y, int) and not isinstance(y, bool):
            y = Fraction(y)
        object.__setattr__(self, "x", _reduce(x))
        object.__setattr__(self, "y", _reduce(y))

    @classmethod
    def rational(cls, x, y) -> "TorusPoint":
        return cls(Fraction(x), Fraction(y))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.x, Fraction) and isinstance(self.y, Fraction)

    def as_array(self) -> np.ndarray:
        return np.array([float(self.x), float(self.y)])

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint(self.x + other.x, self.y + other.y)

    def __neg__(self) -> "TorusPoint":
        return TorusPoint(-self.x, -self.y)

    def __sub__(self, other: "TorusPoint") -> "TorusPoint":
        return self + (-other)

    def to_json(self):
        if self.is_exact:
            return [f"{self.x.numerator}/{self.x.denominator}", f"{self.y.numerator}/{self.y.denominator}"]
        return [float(self.x), float(self.y)]

    @classmethod
    def from_json(cls, data) -> "TorusPoint":
        def parse(v):
            return Fraction(v) if isinstance(v, str) else float(v)

        return cls(parse(data[0]), parse(data[1]))


def torus_distance(p, q) -> float:
    """Quotient Euclidean distance on T^2 (arrays broadcast over leading axes)."""
    p = p.as_array() if isinstance(p, TorusPoint) else p
    q = q.as_array() if isinstance(q, TorusPoint) else q
    diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    diff = diff - np.round(diff)
    return np.sqrt(np.sum(diff * diff, axis=-1))


# ---------------------------------------------------------------------------
# periodic points
# ---------------------------------------------------------------------------

def smith_normal_form_2x2(M):
    """Return ``(U, D, V)`` with ``U @ M @ V = D`` diagonal, ``D[0][0] | D[1][1]``.

    ``U`` and ``V`` are unimodular integer matrices; all arithmetic is exact.
    """
    S = [[int(M[0][0]), int(M[0][1])], [int(M[1][0]), int(M[1][1])]]
    U = [[1, 0], [0, 1]]
    V = [[1, 0], [0, 1]]

    def swap_rows():
        S[0], S[1] = S[1], S[0]
        U[0], U[1] = U[1], U[0]

    def swap_cols():
        for R in (S, V):
            R[0][0], R[0][1] = R[0][1], R[0][0]
            R[1][0], R[1][1] = R[1][1], R[1][0]

    def row_add(dst, src, k):  # row_dst += k * row_src
        for R in (S, U):
            R[dst][0] += k * R[src][0]
            R[dst][1] += k * R[src][1]

    def col_add(dst, src, k):  # col_dst += k * col_src
        for R in (S, V):
            R[0][dst] += k * R[0][src]
            R[1][dst] += k * R[1][src]

    if S == [[0, 0], [0, 0]]:
        return U, S, V
    while True:
        # pivot: smallest nonzero |entry| to (0, 0)
        best = min(
            ((abs(S[i][j]), i, j) for i in range(2) for j in range(2) if S[i][j] != 0),
        )
        _, i, j = best
        if i == 1:
            swap_rows()
        if j == 1:
            swap_cols()
        p = S[0][0]
        if S[1][0] % p == 0 and S[0][1] % p == 0:
            row_add(1, 0, -(S[1][0] // p))
            col_add(1, 0, -(S[0][1] // p))
            if S[1][1] % p == 0:
                break
            row_add(0, 1, 1)  # bring S[1][1] into row 0 and retry
            continue
        if S[1][0] % p:
            row_add(1, 0, -(S[1][0] // p))
        if S[0][1] % p:
            col_add(1, 0, -(S[0][1] // p))
    if S[0][0] < 0:
        for R in (S, U):
            R[0][0], R[0][1] = -R[0][0], -R[0][1]
    if S[1][1] < 0:
        for R in (S, U):
            R[1][0], R[1][1] = -R[1][0], -R[1][1]
    return U, S, V


def fixed_point_count(L: ToralAutomorphism, n: int) -> int:
    """``|det(A^n - I)|`` computed exactly."""
    P = L.power_matrix(n)
    return abs((P[0][0] - 1) * (P[1][1] - 1) - P[0][1] * P[1][0])


def periodic_point_array(L: ToralAutomorphism, n: int) -> tuple[np.ndarray, int]:
    """Fixed points of ``L^n`` as integer numerators over a common denominator.

    Returns ``(num, q)`` with ``num`` of shape ``(|Fix|, 2)``; point ``i`` is
    ``num[i] / q``.  Rows are sorted lexicographically (deterministic order).
    """
    if n < 1:
        raise ValueError("period must be >= 1")
    P = L.power_matrix(n)
    M = [[P[0][0] - 1, P[0][1]], [P[1][0], P[1][1] - 1]]
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    if det == 0:
        raise DegeneratePeriod(f"det(A^{n} - I) = 0")
    _, D, V = smith_normal_form_2x2(M)
    d1, d2 = D[0][0], D[1][1]
    q = d2
    j1 = np.arange(d1, dtype=np.int64) * (d2 // d1)
    j2 = np.arange(d2, dtype=np.int64)
    J1, J2 = np.meshgrid(j1, j2, indexing="ij")
    Vn = np.array(V, dtype=np.int64)
    num = (np.stack([J1.ravel(), J2.ravel()], axis=1) @ Vn.T) % q
    order = np.lexsort((num[:, 1], num[:, 0]))
    return num[order], int(q)


def periodic_points(L: ToralAutomorphism, n: int) -> list[TorusPoint]:
    """All exact solutions of ``L^n x = x`` on the torus."""
    num, q = periodic_point_array(L, n)
    return [TorusPoint(Fraction(int(p0), q), Fraction(int(p1), q)) for p0, p1 in num]


def lift_Mk(p: TorusPoint, k: int) -> TorusPoint:
    """Multiplication by ``k``: ``(kx mod 1, ky mod 1)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return TorusPoint(k * p.x, k * p.y)


# ---------------------------------------------------------------------------
# homoclinic points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomoclinicVector:
    """A point homoclinic to 0: ``v = a*e_u = b*e_s (mod 1)``, ``a*e_u - b*e_s = n``.

    ``a*e_u`` is the lift of ``v`` on the unstable line and ``b*e_s`` the
    lift on the stable line; hence ``d(L^k v, 0) <= C1 * lam**-|k|`` with
    ``C1 = max(|a|, |b|)``.
    """

    v: TorusPoint
    lattice_index: tuple[int, int]
    a: float
    b: float
    decay_constant: float
    L: ToralAutomorphism = field(repr=False, compare=False)

    @property
    def C1(self) -> float:
        return self.decay_constant

    @property
    def unstable_lift(self) -> np.ndarray:
        return self.a * np.array(self.L.e_u)

    @property
    def stable_lift(self) -> np.ndarray:
        return self.b * np.array(self.L.e_s)

    def orbit_point(self, k: int) -> np.ndarray:
        """``L^k v`` as a vector near 0 (drift-free: uses the contracting lift)."""
        L = self.L
        if k >= 0:
            return self.b * (L.mu_s ** k) * np.array(L.e_s)
        return self.a * (L.mu_u ** k) * np.array(L.e_u)

    def image(self) -> "HomoclinicVector":
        """``L(v)``; its lattice index is ``A @ n``."""
        L = self.L
        n0, n1 = self.lattice_index
        return _make_homoclinic(L, (L.a * n0 + L.b * n1, L.c * n0 + L.d * n1),
                                self.a * L.mu_u, self.b * L.mu_s)

    def __add__(self, other: "HomoclinicVector") -> "HomoclinicVector":
        n = (self.lattice_index[0] + other.lattice_index[0],
             self.lattice_index[1] + other.lattice_index[1])
        return _make_homoclinic(self.L, n, self.a + other.a, self.b + other.b)

    def __neg__(self) -> "HomoclinicVector":
        n = (-self.lattice_index[0], -self.lattice_index[1])
        return _make_homoclinic(self.L, n, -self.a, -self.b)

    def __sub__(self, other: "HomoclinicVector") -> "HomoclinicVector":
        return self + (-other)


def _make_homoclinic(L, n, a, b) -> HomoclinicVector:
    # components that are round-off of an exact zero (bracket pieces) are snapped
    a = 0.0 if abs(a) < SNAP_TOL else float(a)
    b = 0.0 if abs(b) < SNAP_TOL else float(b)
    v = a * np.array(L.e_u)
    return HomoclinicVector(
        v=TorusPoint(float(v[0]), float(v[1])),
        lattice_index=(int(n[0]), int(n[1])),
        a=float(a), b=float(b),
        decay_constant=float(max(abs(a), abs(b))),
        L=L,
    )


def homoclinic_from_index(L: ToralAutomorphism, n) -> HomoclinicVector:
    """Solve ``a*e_u - b*e_s = n`` for the homoclinic point of lattice index ``n``."""
    a, minus_b = L.to_eigen(np.array(n, dtype=float))
    return _make_homoclinic(L, n, a, -minus_b)


def verify_homoclinic_decay(h: HomoclinicVector, horizon: int = 30, dps: int = 60) -> float:
    """Max of ``d(L^k v, 0) / (C1 * lam**-|k|)`` over ``|k| <= horizon``.

    The orbit is iterated from ``v`` with the integer matrix in high precision
    (mpmath) so that the ``lam**horizon`` amplification of rounding is harmless.
    A value ``<= 1`` (up to float slack) certifies the decay invariant.
    """
    L = h.L
    if h.decay_constant == 0.0:
        return 0.0
    with mpmath.workdps(dps):
        tr = L.a + L.d
        det = L.a * L.d - L.b * L.c
        root = mpmath.sqrt(tr * tr - 4 * det)
        mu_u = (tr + (root if tr >= 0 else -root)) / 2
        mu_s = det / mu_u
        # eigen-solve in high precision (fresh, not from float e_u)
        def vec(mu):
            v1 = mpmath.matrix([L.b, mu - L.a])
            v2 = mpmath.matrix([mu - L.d, L.c])
            v = v1 if mpmath.norm(v1) >= mpmath.norm(v2) else v2
            v = v / mpmath.norm(v)
            if v[0] < 0 or (v[0] == 0 and v[1] < 0):
                v = -v
            return v
        eu, es = vec(mu_u), vec(mu_s)
        n0, n1 = h.lattice_index
        # a*eu - b*es = n
        Mx = mpmath.matrix([[eu[0], -es[0]], [eu[1], -es[1]]])
        ab = mpmath.lu_solve(Mx, mpmath.matrix([n0, n1]))
        x0 = ab[0] * eu[0]
        x1 = ab[0] * eu[1]
        x0, x1 = x0 - mpmath.floor(x0), x1 - mpmath.floor(x1)
        inv = [[L.d * det, -L.b * det], [-L.c * det, L.a * det]]  # A^-1 = adj/det
        worst = 0.0
        lam = abs(mu_u)
        for direction, M in ((1, [[L.a, L.b], [L.c, L.d]]), (-1, inv)):
            p0, p1 = x0, x1
            for k in range(0, horizon + 1):
                if k > 0:
                    p0, p1 = M[0][0] * p0 + M[0][1] * p1, M[1][0] * p0 + M[1][1] * p1
                    p0, p1 = p0 - mpmath.floor(p0), p1 - mpmath.floor(p1)
                d0 = p0 - mpmath.nint(p0)
                d1 = p1 - mpmath.nint(p1)
                dist = mpmath.sqrt(d0 * d0 + d1 * d1)
                ratio = float(dist / (h.decay_constant * lam ** (-k)))
                worst = max(worst, ratio)
    return worst


def homoclinic_points(L: ToralAutomorphism, lattice_bound: int, verify: bool = True) -> list[HomoclinicVector]:
    """Homoclinic points for every lattice index ``n`` with ``|n|_inf <= lattice_bound``."""
    if lattice_bound < 1:
        raise ValueError("lattice_bound must be >= 1")
    out = []
    for n0 in range(-lattice_bound, lattice_bound + 1):
        for n1 in range(-lattice_bound, lattice_bound + 1):
            h = homoclinic_from_index(L, (n0, n1))
            if verify and verify_homoclinic_decay(h) > 1.0 + 1e-9:
                raise ArithmeticError(f"decay invariant failed for index {(n0, n1)}")
            out.append(h)
    return out


def bracket_decompose(w: HomoclinicVector, L: ToralAutomorphism | None = None):
    """Split ``w`` into a stable piece ``u`` and an unstable piece ``v``, ``u + v = w``.

    Uses the lift ``W`` of ``w`` nearest the origin: writing
    ``W = alpha*e_u + beta*e_s`` gives lifts ``v = alpha*e_u`` (unstable) and
    ``u = beta*e_s`` (stable), both again homoclinic.  This is the
    decomposition realised inside a partition element of diameter < 1/2.
    """
    L = L or w.L
    lift = w.unstable_lift
    m = np.round(lift)
    W = lift - m
    alpha, beta = L.to_eigen(W)
    m = (int(m[0]), int(m[1]))
    n = w.lattice_index
    # u = beta*e_s with lattice index m (u = (a - alpha) e_u - m), v has index n - m
    u = _make_homoclinic(L, m, w.a - alpha, beta)
    v = _make_homoclinic(L, (n[0] - m[0], n[1] - m[1]), alpha, w.b - beta)
    return u, v
