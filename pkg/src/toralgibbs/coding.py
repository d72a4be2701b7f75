"""Markov partitions for hyperbolic toral automorphisms and their symbolic coding.

Everything geometric is done in eigen-coordinates ``(u, s)`` where the map is
diagonal, ``(u, s) -> (mu_u u, mu_s s)``.  Partition elements are boxes
``[u0, u1] x [s0, s1]`` in a fixed planar lift; a transition ``a -> b``
carries the unique lattice vector ``n(a, b)`` with ``L(E_a) - n(a, b)``
crossing ``E_b``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionFailed, EmptyCylinder, NotMixing
from .torus import ToralAutomorphism, TorusPoint

GEOM_TOL = 1e-9
MAX_MIXING_POWER = 50


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box in eigen-coordinates (a parallelogram on the torus)."""

    u0: float
    u1: float
    s0: float
    s1: float

    @property
    def width_u(self) -> float:
        return self.u1 - self.u0

    @property
    def width_s(self) -> float:
        return self.s1 - self.s0

    @property
    def area_eigen(self) -> float:
        return self.width_u * self.width_s

    @property
    def center_eigen(self) -> np.ndarray:
        return np.array([(self.u0 + self.u1) / 2, (self.s0 + self.s1) / 2])

    def is_empty(self, tol=GEOM_TOL) -> bool:
        return self.width_u <= tol or self.width_s <= tol

    def intersect(self, other: "Box") -> "Box":
        return Box(max(self.u0, other.u0), min(self.u1, other.u1),
                   max(self.s0, other.s0), min(self.s1, other.s1))

    def shift(self, du: float, ds: float) -> "Box":
        return Box(self.u0 + du, self.u1 + du, self.s0 + ds, self.s1 + ds)

    def scale(self, cu: float, cs: float) -> "Box":
        u = sorted((self.u0 * cu, self.u1 * cu))
        s = sorted((self.s0 * cs, self.s1 * cs))
        return Box(u[0], u[1], s[0], s[1])

    def contains(self, u, s, tol=GEOM_TOL):
        return (u >= self.u0 - tol) & (u <= self.u1 + tol) & (s >= self.s0 - tol) & (s <= self.s1 + tol)

    def contains_box(self, other: "Box", tol=GEOM_TOL) -> bool:
        return (other.u0 >= self.u0 - tol and other.u1 <= self.u1 + tol
                and other.s0 >= self.s0 - tol and other.s1 <= self.s1 + tol)

    def corners_eigen(self) -> np.ndarray:
        return np.array([[self.u0, self.s0], [self.u1, self.s0], [self.u1, self.s1], [self.u0, self.s1]])

    def corners(self, L: ToralAutomorphism) -> np.ndarray:
        return L.from_eigen(self.corners_eigen())

    def diameter(self, L: ToralAutomorphism) -> float:
        c = self.corners(L)
        return float(max(np.linalg.norm(c[2] - c[0]), np.linalg.norm(c[3] - c[1])))

    def area(self, L: ToralAutomorphism) -> float:
        """Euclidean area of the parallelogram."""
        return self.area_eigen * abs(np.linalg.det(L.basis))

    def center(self, L: ToralAutomorphism) -> TorusPoint:
        c = L.from_eigen(self.center_eigen)
        return TorusPoint(float(c[0]), float(c[1]))


def _lattice_candidates(L: ToralAutomorphism, region: Box) -> list[tuple[int, int]]:
    """Integer vectors whose eigen-coordinates may fall in ``region`` (superset)."""
    c = region.corners(L)
    lo = np.floor(c.min(axis=0) - 1e-7).astype(int)
    hi = np.ceil(c.max(axis=0) + 1e-7).astype(int)
    return [(i, j) for i in range(lo[0], hi[0] + 1) for j in range(lo[1], hi[1] + 1)]


def _translates_meeting(L: ToralAutomorphism, image: Box, target: Box, tol=GEOM_TOL):
    """All ``(n, n_eigen, overlap)`` with ``image ∩ (target + n)`` of nonempty interior."""
    diff = Box(image.u0 - target.u1, image.u1 - target.u0, image.s0 - target.s1, image.s1 - target.s0)
    out = []
    for n in _lattice_candidates(L, diff):
        nu, ns = L.to_eigen(np.array(n, dtype=float))
        ov = image.intersect(target.shift(nu, ns))
        if not ov.is_empty(tol):
            out.append((n, (float(nu), float(ns)), ov))
    return out


# ---------------------------------------------------------------------------
# subshift of finite type
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sft:
    """Subshift of finite type given by a 0/1 transition matrix."""

    transition: np.ndarray
    mixing_power: int = field(init=False)
    indptr: np.ndarray = field(init=False, repr=False, compare=False)
    indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        T = np.asarray(self.transition).astype(bool)
        object.__setattr__(self, "transition", T)
        rows, cols = np.nonzero(T)
        indptr = np.zeros(T.shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        object.__setattr__(self, "indptr", np.cumsum(indptr))
        object.__setattr__(self, "indices", cols.astype(np.int64))
        object.__setattr__(self, "mixing_power", self._mixing_power())

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]

    def _mixing_power(self) -> int:
        T = self.transition.astype(np.int64)
        P = T.copy()
        for n in range(1, MAX_MIXING_POWER + 1):
            if np.all(P > 0):
                return n
            P = np.minimum((P @ T), 1)
        raise NotMixing(f"transition matrix not primitive within {MAX_MIXING_POWER} steps")

    def successors(self, a: int) -> np.ndarray:
        return self.indices[self.indptr[a]:self.indptr[a + 1]]

    def perron_root(self) -> float:
        return float(max(abs(np.linalg.eigvals(self.transition.astype(float)))))

    def trace_power(self, n: int) -> int:
        """``trace(T^n)`` exactly (Python ints)."""
        T = self.transition.astype(object)
        P = np.identity(self.alphabet_size, dtype=object)
        for _ in range(n):
            P = P.dot(T)
        return int(sum(P[i, i] for i in range(self.alphabet_size)))

    def is_admissible(self, symbols) -> bool:
        return all(self.transition[a, b] for a, b in zip(symbols, symbols[1:]))

    def words(self, n: int) -> np.ndarray:
        """All admissible words of length ``n``, lexicographically sorted, shape ``(K, n)``."""
        if n < 1:
            raise ValueError("word length must be >= 1")
        W = np.arange(self.alphabet_size, dtype=np.int64)[:, None]
        deg = np.diff(self.indptr)
        for _ in range(n - 1):
            last = W[:, -1]
            counts = deg[last]
            rep = np.repeat(W, counts, axis=0)
            starts = np.repeat(self.indptr[last], counts)
            offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
            W = np.hstack([rep, self.indices[starts + offs][:, None]])
        return W

    def cyclic_words(self, n: int) -> np.ndarray:
        W = self.words(n)
        return W[self.transition[W[:, -1], W[:, 0]]]


# ---------------------------------------------------------------------------
# coding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Word:
    """Finite word; ``symbols[offset]`` sits at position 0."""

    symbols: tuple
    offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(a) for a in self.symbols))

    def __len__(self):
        return len(self.symbols)

    @property
    def future(self) -> tuple:
        return self.symbols[self.offset:]

    @property
    def past(self) -> tuple:
        """Symbols at positions ``..., -1, 0``."""
        return self.symbols[: self.offset + 1]

    def at(self, j: int) -> int:
        return self.symbols[self.offset + j]

    def shift(self) -> "Word":
        """Left shift: position 1 becomes position 0."""
        return Word(self.symbols, self.offset + 1)


@dataclass(frozen=True)
class Rectangle:
    """Partition element as a torus parallelogram (corner plus eigen-extents)."""

    corner: tuple[float, float]
    unstable_extent: float
    stable_extent: float


@dataclass(frozen=True)
class MarkovCoding:
    """Markov partition ``{E_a}`` with the induced SFT and lattice jumps."""

    L: ToralAutomorphism
    boxes: tuple
    sft: Sft
    jumps: np.ndarray            # (A, A, 2) integer lattice vectors n(a, b)
    jumps_eigen: np.ndarray      # (A, A, 2) eigen-coordinates of n(a, b)
    zero_symbol: int
    refinement: tuple[int, int]
    base_lattice: tuple = ()

    @property
    def alphabet_size(self) -> int:
        return len(self.boxes)

    @property
    def rectangles(self) -> list[Rectangle]:
        out = []
        for b in self.boxes:
            c = self.L.from_eigen([b.u0, b.s0])
            out.append(Rectangle((float(c[0]), float(c[1])), b.width_u, b.width_s))
        return out

    @property
    def diameter(self) -> float:
        return max(b.diameter(self.L) for b in self.boxes)

    @property
    def u_bounds(self) -> np.ndarray:
        return np.array([[b.u0, b.u1] for b in self.boxes])

    @property
    def s_bounds(self) -> np.ndarray:
        return np.array([[b.s0, b.s1] for b in self.boxes])

    def to_json(self) -> dict:
        return {
            "matrix": [[self.L.a, self.L.b], [self.L.c, self.L.d]],
            "refinement": list(self.refinement),
            "rectangles": [
                {"corner": list(r.corner), "unstable_extent": r.unstable_extent, "stable_extent": r.stable_extent}
                for r in self.rectangles
            ],
            "transition": self.sft.transition.astype(int).tolist(),
            "zero_symbol": self.zero_symbol,
        }

    # -- cylinder geometry (vectorised over many words) --------------------
    def future_intervals(self, words) -> np.ndarray:
        """u-intervals ``I(w_0 ... w_{k-1})`` of one-sided future cylinders, shape ``(K, 2)``."""
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))
        U = self.u_bounds
        mu = self.L.mu_u
        lo, hi = U[W[:, -1], 0].copy(), U[W[:, -1], 1].copy()
        for j in range(W.shape[1] - 2, -1, -1):
            a, b = W[:, j], W[:, j + 1]
            nu = self.jumps_eigen[a, b, 0]
            x0, x1 = (lo + nu) / mu, (hi + nu) / mu
            lo, hi = np.maximum(U[a, 0], np.minimum(x0, x1)), np.minimum(U[a, 1], np.maximum(x0, x1))
        return np.stack([lo, hi], axis=1)

    def past_intervals(self, words) -> np.ndarray:
        """s-intervals ``J(w_{-k+1} ... w_0)`` (last column is position 0), shape ``(K, 2)``."""
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))
        S = self.s_bounds
        mu = self.L.mu_s
        lo, hi = S[W[:, 0], 0].copy(), S[W[:, 0], 1].copy()
        for j in range(1, W.shape[1]):
            a, b = W[:, j - 1], W[:, j]
            ns = self.jumps_eigen[a, b, 1]
            x0, x1 = mu * lo - ns, mu * hi - ns
            lo, hi = np.maximum(S[b, 0], np.minimum(x0, x1)), np.minimum(S[b, 1], np.maximum(x0, x1))
        return np.stack([lo, hi], axis=1)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _base_lattice_basis(L: ToralAutomorphism, search: int = 4):
    """Integer basis ``(p, q)`` with eigen-coords ``p = (+, +)`` and ``q = (+, -)``."""
    vecs = [(i, j) for i in range(-search, search + 1) for j in range(-search, search + 1) if (i, j) != (0, 0)]
    best = None
    for p, q in itertools.product(vecs, vecs):
        if abs(p[0] * q[1] - p[1] * q[0]) != 1:
            continue
        pu, ps = L.to_eigen(np.array(p, dtype=float))
        qu, qs = L.to_eigen(np.array(q, dtype=float))
        if min(pu, ps, qu, -qs) <= 1e-12:
            continue
        size = max(pu + qu, ps - qs)
        key = (round(size, 12), p, q)
        if best is None or key < best[0]:
            best = (key, p, q, (pu, ps), (qu, qs))
    if best is None:
        raise ConstructionFailed("no suitable lattice basis for the two-rectangle partition")
    return best[1:]


def base_partition(L: ToralAutomorphism) -> tuple[list[Box], tuple]:
    """The classical two-rectangle partition built from a lattice basis.

    With lattice vectors ``p = (p_u, p_s)`` (both positive) and
    ``q = (q_u, q_s)`` (``q_s < 0``) the boxes ``[0, p_u] x [0, -q_s]`` and
    ``[p_u, p_u + q_u] x [0, p_s]`` tile the plane under the lattice.
    """
    p, q, (pu, ps), (qu, qs) = _base_lattice_basis(L)
    boxes = [Box(0.0, pu, 0.0, -qs), Box(pu, pu + qu, 0.0, ps)]
    return boxes, (p, q)


def _join(L: ToralAutomorphism, base: list[Box], past: int, future: int) -> list[Box]:
    """Boxes of ``V_{j=-past}^{future} L^{-j} P`` (connected components, as planar lifts)."""
    atoms = []
    for E in base:
        boxes = [E]
        steps = [j for j in range(1, future + 1)] + [-j for j in range(1, past + 1)]
        for j in steps:
            cu, cs = L.mu_u ** j, L.mu_s ** j
            new = []
            for box in boxes:
                image = box.scale(cu, cs)
                for F in base:
                    for _, _, ov in _translates_meeting(L, image, F):
                        new.append(ov.scale(1.0 / cu, 1.0 / cs))
            boxes = new
        atoms.extend(boxes)
    return atoms


def _check_tiling(L: ToralAutomorphism, boxes: list[Box], samples: int = 4000) -> None:
    total = sum(b.area(L) for b in boxes)
    if abs(total - 1.0) > 1e-9:
        raise ConstructionFailed(f"partition area {total!r} != 1")
    rng = np.random.default_rng(12345)
    pts = rng.random((samples, 2))
    hits = np.zeros(samples, dtype=int)
    for b in boxes:
        for n in _lattice_candidates(L, b):
            us = L.to_eigen(pts + np.array(n, dtype=float))
            hits += b.contains(us[:, 0], us[:, 1], tol=-1e-12)
    # points within 1e-12 of a boundary may be missed; with random samples that has probability ~0
    if not np.all(hits == 1):
        raise ConstructionFailed("boxes do not tile the torus")


def _transitions(L: ToralAutomorphism, boxes: list[Box]):
    A = len(boxes)
    T = np.zeros((A, A), dtype=bool)
    jumps = np.zeros((A, A, 2), dtype=np.int64)
    jumps_e = np.zeros((A, A, 2))
    for a, Ea in enumerate(boxes):
        image = Ea.scale(L.mu_u, L.mu_s)
        for b, Eb in enumerate(boxes):
            hits = _translates_meeting(L, image, Eb)
            if not hits:
                continue
            if len(hits) > 1:
                raise ConstructionFailed(f"transition {a}->{b} crosses more than once")
            n, (nu, ns), ov = hits[0]
            shifted = Eb.shift(nu, ns)
            # Markov: the crossing spans E_b in u and L(E_a) in s
            if abs(ov.u0 - shifted.u0) > GEOM_TOL or abs(ov.u1 - shifted.u1) > GEOM_TOL:
                raise ConstructionFailed(f"transition {a}->{b} does not cross fully in the unstable direction")
            if abs(ov.s0 - image.s0) > GEOM_TOL or abs(ov.s1 - image.s1) > GEOM_TOL:
                raise ConstructionFailed(f"transition {a}->{b} does not cross fully in the stable direction")
            T[a, b] = True
            jumps[a, b] = n
            jumps_e[a, b] = (nu, ns)
    return T, jumps, jumps_e


def build_partition(L: ToralAutomorphism, refinement: tuple[int, int] | None = None,
                    max_diameter: float = 0.5) -> MarkovCoding:
    """Markov coding from the two-rectangle partition refined by a two-sided join.

    With ``refinement=None`` the join ``V_{j=-p}^{q} L^{-j} P`` is grown from
    ``(p, q) = (1, 1)`` (alternately increasing ``q`` and ``p``) until every
    element has diameter below ``max_diameter``.
    """
    base, basis = base_partition(L)
    if refinement is None:
        p, q = 1, 1
        while True:
            boxes = _join(L, base, p, q)
            if max(b.diameter(L) for b in boxes) < max_diameter:
                break
            if q <= p:
                q += 1
            else:
                p += 1
            if p + q > 12:
                raise ConstructionFailed("refinement did not reach the diameter target")
    else:
        p, q = refinement
        boxes = _join(L, base, p, q)
        if max(b.diameter(L) for b in boxes) >= max_diameter:
            raise ConstructionFailed(f"refinement {refinement} leaves diameter >= {max_diameter}")
    # deterministic order: by corner
    boxes = sorted(boxes, key=lambda b: (round(b.u0, 12), round(b.s0, 12), b.u1, b.s1))
    _check_tiling(L, boxes)
    T, jumps, jumps_e = _transitions(L, boxes)
    sft = Sft(T)
    loops = [a for a in range(len(boxes)) if T[a, a]]
    if not loops:
        raise ConstructionFailed("no symbol with a self-transition")
    zero = max(loops, key=lambda a: (boxes[a].area_eigen, -a))
    return MarkovCoding(L=L, boxes=tuple(boxes), sft=sft, jumps=jumps, jumps_eigen=jumps_e,
                        zero_symbol=zero, refinement=(p, q), base_lattice=basis)


# ---------------------------------------------------------------------------
# encode / decode
# ---------------------------------------------------------------------------

def locate(coding: MarkovCoding, x, tol=GEOM_TOL) -> list[tuple[int, np.ndarray]]:
    """All ``(symbol, eigen-lift)`` with the lift of ``x`` inside ``E_symbol`` (within ``tol``)."""
    L = coding.L
    xa = x.as_array() if isinstance(x, TorusPoint) else np.asarray(x, dtype=float) % 1.0
    out = []
    for a, box in enumerate(coding.boxes):
        grown = Box(box.u0 - 1e-7, box.u1 + 1e-7, box.s0 - 1e-7, box.s1 + 1e-7)
        shifted = grown.shift(*(-L.to_eigen(xa)))
        for n in _lattice_candidates(L, shifted):
            us = L.to_eigen(xa + np.array(n, dtype=float))
            if box.contains(us[0], us[1], tol):
                out.append((a, us))
    return out


def _forward_branches(coding, a, us, steps, tol):
    if steps == 0:
        return [()]
    L = coding.L
    out = []
    for b in coding.sft.successors(a):
        nu, ns = coding.jumps_eigen[a, b]
        nxt = np.array([L.mu_u * us[0] - nu, L.mu_s * us[1] - ns])
        if coding.boxes[b].contains(nxt[0], nxt[1], tol):
            out.extend((int(b),) + rest for rest in _forward_branches(coding, b, nxt, steps - 1, tol))
    return out


def _backward_branches(coding, a, us, steps, tol):
    if steps == 0:
        return [()]
    L = coding.L
    T = coding.sft.transition
    out = []
    for c in np.nonzero(T[:, a])[0]:
        nu, ns = coding.jumps_eigen[c, a]
        prv = np.array([(us[0] + nu) / L.mu_u, (us[1] + ns) / L.mu_s])
        if coding.boxes[c].contains(prv[0], prv[1], tol):
            out.extend(rest + (int(c),) for rest in _backward_branches(coding, c, prv, steps - 1, tol))
    return out


def encode(coding: MarkovCoding, x, depth: int, tol=GEOM_TOL, past: int | None = None) -> list[Word]:
    """All itineraries ``(a_{-past}, ..., a_depth)`` of ``x`` (``past`` defaults to ``depth``).

    Interior points have exactly one; points on the partition boundary get
    every compatible code.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    past = depth if past is None else past
    words = set()
    for a, us in locate(coding, x, tol):
        fw = _forward_branches(coding, a, us, depth, tol)
        bw = _backward_branches(coding, a, us, past, tol)
        for f in fw:
            for b in bw:
                words.add(b + (a,) + f)
    return [Word(w, past) for w in sorted(words)]


def encode_future(coding: MarkovCoding, x, depth: int, tol=GEOM_TOL) -> list[tuple]:
    """Future itineraries ``(a_0, ..., a_{depth-1})`` of ``x``."""
    return sorted({w.symbols for w in encode(coding, x, depth - 1, tol, past=0)})


def decode(coding: MarkovCoding, w: Word) -> Box:
    """The cylinder ``{x : L^j x in E_{w_j}}`` as a box in the lift of ``E_{w_0}``."""
    if not coding.sft.is_admissible(w.symbols):
        raise EmptyCylinder(f"inadmissible word {w.symbols}")
    fut = coding.future_intervals(np.array(w.future))[0]
    pst = coding.past_intervals(np.array(w.past))[0]
    box = Box(fut[0], fut[1], pst[0], pst[1])
    if box.is_empty(0.0):
        raise EmptyCylinder(f"empty cylinder for {w.symbols}")
    return box


def periodic_words(coding: MarkovCoding, n: int) -> list[Word]:
    """All cyclically admissible words of length ``n`` (count ``trace(T^n)``)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [Word(tuple(w), 0) for w in coding.sft.cyclic_words(n)]


def periodic_code_point(coding: MarkovCoding, word) -> np.ndarray:
    """Eigen-lift in ``E_{w_0}`` of the point with periodic code ``w^infinity``.

    Solves the affine fixed-point equations of the periodic itinerary in the
    u- and s-coordinates separately.
    """
    L = coding.L
    w = list(word)
    n = len(w)
    cu, du = 1.0, 0.0  # u_n = cu*u_0 + du (follow forward jumps)
    cs, ds = 1.0, 0.0
    for j in range(n):
        a, b = w[j], w[(j + 1) % n]
        nu, ns = coding.jumps_eigen[a, b]
        cu, du = L.mu_u * cu, L.mu_u * du - nu
        cs, ds = L.mu_s * cs, L.mu_s * ds - ns
    return np.array([du / (1.0 - cu), ds / (1.0 - cs)])
