"""Equilibrium states on the symbolic side.

A potential is discretised on one-sided words of length ``m`` (``psi(w)``);
the transfer matrix on ``m``-words is ``M[(a w), (w b)] = exp(psi(a w))``.
Its Perron data give the pressure ``log rho``, the eigenfunction ``h`` (left
vector) and the stationary Markov measure ``nu`` on cylinders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .coding import MarkovCoding, Sft
from .errors import NoConvergence, ZeroMassCylinder
from .potential import Potential

DEFAULT_TRUNCATION = 60
POWER_TOL = 1e-12
POWER_MAXITER = 100_000


# ---------------------------------------------------------------------------
# word indexing
# ---------------------------------------------------------------------------

class WordTable:
    """Lexicographically sorted admissible words with integer keys for lookup."""

    def __init__(self, words: np.ndarray, alphabet_size: int):
        self.words = np.asarray(words, dtype=np.int64)
        self.A = int(alphabet_size)
        self.length = self.words.shape[1]
        if self.A ** self.length >= 2 ** 63:
            raise ValueError(f"words of length {self.length} over {self.A} symbols overflow 64-bit keys")
        self.keys = word_keys(self.words, self.A)

    def __len__(self):
        return self.words.shape[0]

    def lookup(self, words) -> np.ndarray:
        """Row indices of ``words`` (``-1`` where absent)."""
        k = word_keys(np.atleast_2d(words), self.A)
        idx = np.searchsorted(self.keys, k)
        idx = np.minimum(idx, len(self.keys) - 1)
        return np.where(self.keys[idx] == k, idx, -1)


def word_keys(words: np.ndarray, A: int) -> np.ndarray:
    W = np.asarray(words, dtype=np.int64)
    k = np.zeros(W.shape[0], dtype=np.int64)
    for j in range(W.shape[1]):
        k = k * A + W[:, j]
    return k


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass
class GibbsApproximation:
    """Depth-``m`` approximation of the equilibrium state of ``psi``."""

    depth: int
    sft: Sft
    table: WordTable
    psi: np.ndarray
    weights: np.ndarray
    pressure: float
    eigenfunction: np.ndarray       # left Perron vector h (sum-normalised)
    right: np.ndarray               # right Perron vector
    iterations: int
    bowen_constant: float
    coding: MarkovCoding | None = None
    potential: Potential | None = None
    _marginals: dict = field(default_factory=dict, repr=False)

    @property
    def words(self) -> np.ndarray:
        return self.table.words

    # -- cylinder measures -------------------------------------------------
    def _transition_log(self, i, j):
        """log of the Markov transition probability between m-word states i -> j."""
        return self.psi[i] - self.pressure + np.log(self.right[j]) - np.log(self.right[i])

    def marginal(self, k: int):
        """``(WordTable, weights)`` for all admissible ``k``-words (``k <= depth``)."""
        m = self.depth
        if k > m or k < 1:
            raise ValueError("marginal length must be in 1..depth")
        if k == m:
            return self.table, self.weights
        if k not in self._marginals:
            A = self.table.A
            pk = self.table.keys // (A ** (m - k))
            uniq, start = np.unique(pk, return_index=True)
            w = np.add.reduceat(self.weights, start)
            tab = WordTable(self.table.words[start, :k], A)
            assert np.array_equal(tab.keys, uniq)
            self._marginals[k] = (tab, w)
        return self._marginals[k]

    def log_cylinder_weights(self, words) -> np.ndarray:
        """``log nu(C_w)`` for words (rows) of any common length; ``-inf`` if inadmissible."""
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))
        k, m = W.shape[1], self.depth
        if k <= m:
            tab, w = self.marginal(k)
            idx = tab.lookup(W)
            out = np.full(W.shape[0], -np.inf)
            ok = idx >= 0
            with np.errstate(divide="ignore"):
                out[ok] = np.log(w[idx[ok]])
            return out
        idx = [self.table.lookup(W[:, j:j + m]) for j in range(k - m + 1)]
        bad = np.zeros(W.shape[0], dtype=bool)
        for ix in idx:
            bad |= ix < 0
        safe = [np.where(ix < 0, 0, ix) for ix in idx]
        with np.errstate(divide="ignore"):
            out = np.log(self.weights[safe[0]])
        for i0, i1 in zip(safe[:-1], safe[1:]):
            out = out + self._transition_log(i0, i1)
        out[bad] = -np.inf
        return out

    def cylinder_weights(self, words) -> np.ndarray:
        return np.exp(self.log_cylinder_weights(words))

    def cylinder_weight(self, symbols) -> float:
        return float(self.cylinder_weights(np.array([list(symbols)]))[0])

    # -- Perron data as maps ---------------------------------------------
    def eigenfunction_of(self, words) -> np.ndarray:
        idx = self.table.lookup(words)
        if np.any(idx < 0):
            raise KeyError("inadmissible word")
        return self.eigenfunction[idx]

    def to_json(self, top_k: int | None = None) -> dict:
        order = np.argsort(-self.weights, kind="stable")
        if top_k is not None:
            order = order[:top_k]
        return {
            "depth": self.depth,
            "pressure": self.pressure,
            "bowen_constant": self.bowen_constant,
            "weights": [
                {"word": self.words[i].tolist(), "weight": float(self.weights[i])} for i in order
            ],
        }


@dataclass
class GFunction:
    """``g(a w) = nu(C_{a w}) / nu(C_w)`` on words of length ``depth``."""

    depth: int
    table: WordTable
    log_values: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def words(self) -> np.ndarray:
        return self.table.words

    def log_g(self, words) -> np.ndarray:
        """``log g`` at the first ``depth`` symbols of each row."""
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))[:, : self.depth]
        idx = self.table.lookup(W)
        if np.any(idx < 0):
            raise KeyError("word not admissible or too short for this g-function")
        return self.log_values[idx]

    def __call__(self, words) -> np.ndarray:
        return np.exp(self.log_g(words))

    def normalization_error(self) -> float:
        """``max_w |sum_a g(a w) - 1|`` over stored tails ``w``."""
        A = self.table.A
        tail = self.table.keys % (A ** (self.depth - 1))
        order = np.argsort(tail, kind="stable")
        t_sorted = tail[order]
        uniq, start = np.unique(t_sorted, return_index=True)
        sums = np.add.reduceat(self.values[order], start)
        return float(np.max(np.abs(sums - 1.0)))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def word_graph(table: WordTable):
    """CSR successor structure of the ``m``-word graph ``(a w) -> (w b)``."""
    A, m = table.A, table.length
    suffix = table.keys % (A ** (m - 1)) if m > 1 else np.zeros(len(table), dtype=np.int64)
    prefix = table.keys // A if m > 1 else np.zeros(len(table), dtype=np.int64)
    lo = np.searchsorted(prefix, suffix, side="left")
    hi = np.searchsorted(prefix, suffix, side="right")
    counts = hi - lo
    if m == 1:
        raise ValueError("use depth >= 2 (depth 1 has no word-graph structure)")
    indptr = np.concatenate([[0], np.cumsum(counts)])
    offs = np.arange(indptr[-1]) - np.repeat(indptr[:-1], counts)
    indices = np.repeat(lo, counts) + offs
    return indptr.astype(np.int64), indices.astype(np.int64)


def _perron(table: WordTable, psi: np.ndarray, tol=POWER_TOL, maxiter=POWER_MAXITER):
    indptr, indices = word_graph(table)
    shift = float(np.max(psi))
    w = np.exp(psi - shift)
    rho, r, l, it = _kernels.power_iteration(indptr, indices, w, tol, maxiter)
    if it < 0:
        raise NoConvergence(f"power iteration did not converge in {maxiter} iterations")
    return math.log(rho) + shift, r, l, it


def equilibrium(psi_on_words, sft: Sft, depth: int, tol: float = POWER_TOL,
                maxiter: int = POWER_MAXITER) -> GibbsApproximation:
    """Perron data of the depth-``m`` transfer matrix for ``psi``.

    ``psi_on_words`` is either an array aligned with ``sft.words(depth)`` or a
    callable mapping a ``(K, depth)`` word array to ``K`` values.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    sft.mixing_power  # Sft construction already rejects non-mixing matrices
    table = WordTable(sft.words(depth), sft.alphabet_size)
    psi = psi_on_words(table.words) if callable(psi_on_words) else np.asarray(psi_on_words, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (len(table),):
        raise ValueError("psi must have one value per admissible word")
    if not np.all(np.isfinite(psi)):
        raise ValueError("psi must be finite")
    P, r, l, it = _perron(table, psi, tol, maxiter)
    pi = l * r
    total = math.fsum(pi.tolist())
    if not (total > 0):
        raise ZeroMassCylinder("stationary weights vanish")
    weights = pi / total
    # renormalise the last float ulp so that the sum is 1 to ~1e-16
    weights = weights / math.fsum(weights.tolist())
    G = GibbsApproximation(depth=depth, sft=sft, table=table, psi=psi, weights=weights,
                              pressure=P, eigenfunction=l, right=r, iterations=it,
                              bowen_constant=float("nan"))
    G.bowen_constant = bowen_constant(G, lambda W: word_birkhoff_sums(G, W), orders=range(1, depth + 1))
    return G


def cylinder_potential(phi: Potential, coding: MarkovCoding, depth: int,
                       truncation: int = DEFAULT_TRUNCATION, words: np.ndarray | None = None) -> np.ndarray:
    """Future-only potential cohomologous to ``phi``, evaluated on ``depth``-words.

    For a future word ``w`` let ``x*`` have the cylinder's central unstable
    coordinate and the central stable coordinate of ``E_{w_0}``.  With
    ``y = L x*`` and ``d = s*_{w_1} + n_s(w_0, w_1) - mu_s s*_{w_0}``::

        psi(w) = phi(x*) + sum_{n < N} phi(L^n y) - phi(L^n y + mu_s^n d e_s)

    which is ``phi + u o L - u`` for a bounded transfer function ``u`` that
    straightens every local stable leaf, so ``psi`` depends on the future only.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    L = coding.L
    W = coding.sft.words(depth) if words is None else np.asarray(words, dtype=np.int64)
    I = coding.future_intervals(W)
    u_c = I.mean(axis=1)
    s_mid = coding.s_bounds.mean(axis=1)
    a0, a1 = W[:, 0], W[:, 1]
    xstar = L.from_eigen(np.stack([u_c, s_mid[a0]], axis=1))
    y = (xstar @ L.matrix.T.astype(float)) % 1.0
    d0 = s_mid[a1] + coding.jumps_eigen[a0, a1, 1] - L.mu_s * s_mid[a0]
    dvec = d0[:, None] * np.array(L.e_s)[None, :]
    base = phi(xstar % 1.0)
    if phi.is_constant:
        return np.full(W.shape[0], phi.constant)
    tail = _kernels.stable_diff_sums(y, dvec, L.matrix, L.mu_s, truncation, *phi.kernel_args)
    return base + tail


def gibbs_state(phi: Potential, coding: MarkovCoding, depth: int,
                truncation: int = DEFAULT_TRUNCATION) -> GibbsApproximation:
    """Equilibrium state of ``phi`` (a torus potential) at symbolic depth ``depth``."""
    psi = cylinder_potential(phi, coding, depth, truncation)
    G = equilibrium(psi, coding.sft, depth)
    G.coding = coding
    G.potential = phi
    G.bowen_constant = bowen_constant(G, phi, orders=range(1, depth + 1))
    return G


# ---------------------------------------------------------------------------
# derived objects
# ---------------------------------------------------------------------------

def g_function(G: GibbsApproximation) -> GFunction:
    """``g`` on ``(m+1)``-words: ``exp(psi(a w') - P) h(a w') / h(w)``."""
    m = G.depth
    if m < 2:
        raise ValueError("depth must be >= 2")
    if np.any(G.eigenfunction <= 0) or not np.all(np.isfinite(G.eigenfunction)):
        raise ZeroMassCylinder("eigenfunction underflow")
    table = WordTable(G.sft.words(m + 1), G.table.A)
    head = G.table.lookup(table.words[:, :m])
    tail = G.table.lookup(table.words[:, 1:])
    logh = np.log(G.eigenfunction)
    log_g = G.psi[head] - G.pressure + logh[head] - logh[tail]
    if not np.all(np.isfinite(log_g)):
        raise ZeroMassCylinder("g underflow")
    return GFunction(depth=m + 1, table=table, log_values=log_g)


def product_density(G: GibbsApproximation, w_minus, w_plus) -> float:
    """``nu(C_{w- w+}) / (nu-(C_{w-}) nu+(C_{w+}))``.

    ``w_minus`` holds positions ``-p .. -1`` and ``w_plus`` positions
    ``0 .. q``; ``w_plus[0]`` must be the zero symbol when a coding is attached.
    """
    wm = tuple(getattr(w_minus, "symbols", w_minus))
    wp = tuple(getattr(w_plus, "symbols", w_plus))
    if G.coding is not None and wp[0] != G.coding.zero_symbol:
        raise ValueError("w_plus must start with the zero symbol")
    joint = G.cylinder_weight(wm + wp)
    m_ = G.cylinder_weight(wm)
    p_ = G.cylinder_weight(wp)
    if joint <= 0 or m_ <= 0 or p_ <= 0:
        raise ZeroMassCylinder(f"zero mass for {wm} | {wp}")
    return joint / (m_ * p_)


def product_density_table(G: GibbsApproximation, past: int, future: int):
    """All admissible ``(w-, w+)`` with ``|w-| = past``, ``|w+| = future``, ``w+_0 = 0``.

    Returns ``(words, rho, nu_minus, nu_plus_index)`` where ``words`` has rows
    ``w- w+``.
    """
    zero = G.coding.zero_symbol if G.coding is not None else 0
    W = G.sft.words(past + future)
    W = W[W[:, past] == zero]
    logj = G.log_cylinder_weights(W)
    logm = G.log_cylinder_weights(W[:, :past])
    logp = G.log_cylinder_weights(W[:, past:])
    rho = np.exp(logj - logm - logp)
    return W, rho, np.exp(logm), np.exp(logp)


def marginal_identity_error(G: GibbsApproximation, past: int, future: int) -> float:
    """``max_{w+} |sum_{w-} rho(w-, w+) nu-(w-) - 1|``."""
    W, rho, num, _ = product_density_table(G, past, future)
    A = G.table.A
    keys = word_keys(W[:, past:], A)
    order = np.argsort(keys, kind="stable")
    uniq, start = np.unique(keys[order], return_index=True)
    sums = np.add.reduceat((rho * num)[order], start)
    return float(np.max(np.abs(sums - 1.0)))


def word_birkhoff_sums(G: GibbsApproximation, words) -> np.ndarray:
    """``S_n psi`` for ``n``-words, continuing each word by its first admissible successors.

    This is the symbolic Birkhoff sum at one point of the cylinder, using only
    the word potential stored in ``G``.
    """
    W = np.atleast_2d(np.asarray(words, dtype=np.int64))
    n, m = W.shape[1], G.depth
    ext = [W]
    last = W[:, -1]
    first_succ = G.sft.indices[G.sft.indptr[:-1]]
    for _ in range(m - 1):
        last = first_succ[last]
        ext.append(last[:, None])
    X = np.hstack(ext)
    total = np.zeros(W.shape[0])
    for j in range(n):
        idx = G.table.lookup(X[:, j:j + m])
        total += G.psi[idx]
    return total


def center_birkhoff_sums(phi: Potential, coding: MarkovCoding, words: np.ndarray) -> np.ndarray:
    """``S_n phi`` at the centre of each one-sided cylinder ``[w_0 ... w_{n-1}]``.

    The orbit is followed inside the lifted boxes (``u -> mu_u u - n_u``), so
    no floating drift accumulates on the torus.
    """
    L = coding.L
    W = np.atleast_2d(np.asarray(words, dtype=np.int64))
    n = W.shape[1]
    I = coding.future_intervals(W)
    u = I.mean(axis=1)
    s = coding.s_bounds.mean(axis=1)[W[:, 0]]
    total = np.zeros(W.shape[0])
    comp = np.zeros(W.shape[0])
    for j in range(n):
        vals = phi((L.from_eigen(np.stack([u, s], axis=1))) % 1.0)
        y = vals - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if j + 1 < n:
            a, b = W[:, j], W[:, j + 1]
            u = L.mu_u * u - coding.jumps_eigen[a, b, 0]
            s = L.mu_s * s - coding.jumps_eigen[a, b, 1]
    return total


def bowen_constant(G: GibbsApproximation, psi: Callable | Potential | None = None,
                   orders=(4, 6, 8, 10), return_all: bool = False):
    """Smallest ``C`` with ``C^-1 <= nu(C_w) / exp(S_n psi(w) - nP) <= C`` over order-``n`` cylinders.

    ``psi`` may be a torus :class:`Potential` (evaluated at cylinder centres
    through the attached coding) or a callable on ``(K, n)`` word arrays
    returning ``S_n psi``.  Defaults to the potential attached to ``G``.
    """
    psi = G.potential if psi is None else psi
    per_order = {}
    for n in orders:
        if n > G.depth:
            raise ValueError("orders must not exceed the depth")
        tab, w = G.marginal(n)
        if isinstance(psi, Potential):
            if G.coding is None:
                raise ValueError("a coding is needed to evaluate a torus potential")
            S = center_birkhoff_sums(psi, G.coding, tab.words)
        else:
            S = np.asarray(psi(tab.words), dtype=float)
        ratio = np.log(w) - (S - n * G.pressure)
        per_order[n] = float(math.exp(max(ratio.max(), -ratio.min())))
    C = max(per_order.values())
    return (C, per_order) if return_all else C
