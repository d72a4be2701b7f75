"""Backend parity: each hot kernel agrees between numba and numpy."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toralgibbs import _kernels
from toralgibbs.coding import build_partition
from toralgibbs.gibbs import WordTable, word_graph
from toralgibbs.torus import cat_map, periodic_point_array

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not importable")

FREQS = np.array([[1.0, 0.0], [2.0, -1.0], [0.0, 3.0]])
CCOS = np.array([0.3, -0.1, 0.05])
CSIN = np.array([0.0, 0.2, -0.07])


def both(fn, *args, **kw):
    prev = _kernels.set_backend("numpy")
    try:
        a = fn(*args, **kw)
        _kernels.set_backend("numba")
        b = fn(*args, **kw)
    finally:
        _kernels.set_backend(prev)
    return a, b


def test_set_backend_roundtrip():
    prev = _kernels.set_backend("numpy")
    assert _kernels.backend() == "numpy"
    _kernels.set_backend(prev)
    assert _kernels.backend() == prev
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")


def test_trig_eval_matches_closed_form():
    rng = np.random.default_rng(1)
    pts = rng.random((50, 2))
    direct = 0.25 + sum(
        c * np.cos(2 * np.pi * pts @ f) + s * np.sin(2 * np.pi * pts @ f)
        for f, c, s in zip(FREQS, CCOS, CSIN)
    )
    got = _kernels.trig_eval(pts, FREQS, CCOS, CSIN, 0.25)
    np.testing.assert_allclose(got, direct, atol=1e-14)


def test_trig_eval_empty_potential_is_constant():
    pts = np.random.default_rng(0).random((7, 2))
    out = _kernels.trig_eval(pts, np.zeros((0, 2)), np.zeros(0), np.zeros(0), -1.5)
    assert np.all(out == -1.5)


@needs_numba
@given(st.integers(0, 10_000))
def test_trig_eval_parity(seed):
    pts = np.random.default_rng(seed).random((20, 2))
    a, b = both(_kernels.trig_eval, pts, FREQS, CCOS, CSIN, 0.1)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


@needs_numba
@pytest.mark.parametrize("n", [3, 7, 10])
def test_orbit_sums_parity(n):
    L = cat_map()
    num, q = periodic_point_array(L, n)
    a, b = both(_kernels.orbit_sums, num, q, L.matrix, n, FREQS, CCOS, CSIN, 0.0)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_orbit_sums_against_python_loop():
    L = cat_map()
    num, q = periodic_point_array(L, 5)
    got = _kernels.orbit_sums(num, q, L.matrix, 5, FREQS, CCOS, CSIN, 0.0)
    for i in range(len(num)):
        p = num[i].astype(np.int64)
        acc = 0.0
        for _ in range(5):
            acc += float(_kernels._trig_eval_np((p / q)[None, :], FREQS, CCOS, CSIN, 0.0)[0])
            p = (L.matrix @ p) % q
        assert got[i] == pytest.approx(acc, abs=1e-12)


@needs_numba
def test_stable_diff_sums_parity():
    L = cat_map()
    rng = np.random.default_rng(3)
    y = rng.random((30, 2))
    d = rng.normal(size=(30, 1)) * np.array(L.e_s)[None, :]
    a, b = both(_kernels.stable_diff_sums, y, d, L.matrix, L.mu_s, 40, FREQS, CCOS, CSIN, 0.0)
    # orbits of y are chaotic, so the two loops may round differently after ~30 steps;
    # the summands there are tiny (mu_s**n), which is what keeps the agreement tight
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


def _dense(indptr, indices, w):
    n = len(w)
    M = np.zeros((n, n))
    for i in range(n):
        M[i, indices[indptr[i]:indptr[i + 1]]] = w[i]
    return M


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_power_iteration_against_dense_eig(backend):
    C = build_partition(cat_map())
    table = WordTable(C.sft.words(4), C.alphabet_size)
    indptr, indices = word_graph(table)
    w = np.exp(np.random.default_rng(5).normal(scale=0.3, size=len(table)))
    prev = _kernels.set_backend(backend)
    try:
        rho, r, l, it = _kernels.power_iteration(indptr, indices, w)
    finally:
        _kernels.set_backend(prev)
    assert it > 0
    M = _dense(indptr, indices, w)
    ev = np.linalg.eigvals(M)
    assert rho == pytest.approx(np.max(np.abs(ev)), rel=1e-10)
    np.testing.assert_allclose(M @ r, rho * r, atol=1e-10)
    np.testing.assert_allclose(l @ M, rho * l, atol=1e-10)
    assert r.sum() == pytest.approx(1.0) and l.sum() == pytest.approx(1.0)


def test_power_iteration_reports_non_convergence():
    C = build_partition(cat_map())
    table = WordTable(C.sft.words(3), C.alphabet_size)
    indptr, indices = word_graph(table)
    rho, r, l, it = _kernels.power_iteration(indptr, indices, np.ones(len(table)), tol=1e-15, maxiter=2)
    assert it == -1
