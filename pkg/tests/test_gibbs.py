import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toralgibbs.coding import Box, Sft, periodic_code_point, periodic_words
from toralgibbs.gibbs import (
    WordTable,
    bowen_constant,
    cylinder_potential,
    equilibrium,
    g_function,
    gibbs_state,
    marginal_identity_error,
    product_density,
    product_density_table,
)
from toralgibbs.potential import Potential, birkhoff_sum, geometric_potential
from toralgibbs.torus import TorusPoint

GOLDEN = (1 + math.sqrt(5)) / 2
FULL3 = Sft(np.ones((3, 3), dtype=int))


def _perron_left(T):
    ev, vec = np.linalg.eig(T.astype(float).T)
    i = int(np.argmax(ev.real))
    l = np.abs(vec[:, i].real)
    return ev[i].real, l / l.sum()


# -- pressure -----------------------------------------------------------------------

def test_zero_potential_gives_topological_entropy(coding):
    G = gibbs_state(Potential.const(0.0), coding, 10)
    rho, _ = _perron_left(coding.sft.transition)
    assert G.pressure == pytest.approx(math.log(rho), abs=1e-10)
    assert G.pressure == pytest.approx(math.log(GOLDEN), abs=1e-6)


def test_constant_shift(coding, psi):
    a = gibbs_state(psi, coding, 8)
    b = gibbs_state(psi + 0.37, coding, 8)
    assert b.pressure - a.pressure == pytest.approx(0.37, abs=1e-10)


def test_monotone_in_potential(coding, psi):
    lo = gibbs_state(psi, coding, 8).pressure
    hi = gibbs_state(psi + Potential.cosine(0.05, (0, 1)) + 0.05, coding, 8).pressure
    assert hi >= lo


def test_depth_stability_is_geometric(coding, psi):
    P = [gibbs_state(psi, coding, m).pressure for m in (4, 6, 8, 10, 12)]
    d = np.abs(np.diff(P))
    assert np.all(d[1:] < d[:-1])


def test_normalisation_hits_zero(gibbs10):
    G, _ = gibbs10
    assert abs(G.pressure) < 1e-4


# -- Lebesgue (geometric potential) ----------------------------------------------------

def test_geometric_potential_gives_lebesgue(L, coding):
    G = gibbs_state(geometric_potential(L), coding, 8)
    assert G.pressure == pytest.approx(0.0, abs=1e-6)
    I = coding.future_intervals(G.words)
    S = coding.s_bounds[G.words[:, 0]]
    # eigenvectors of the symmetric cat matrix are orthonormal, so eigen-area = area
    area = (I[:, 1] - I[:, 0]) * (S[:, 1] - S[:, 0])
    np.testing.assert_allclose(area.sum(), 1.0, atol=1e-12)
    np.testing.assert_allclose(G.weights, area, rtol=1e-4)


def test_lebesgue_g_geometric_oracle(coding, lebesgue10):
    # nu[a w] = |I(a w)| S(a) with |I(a w)| = |I(w)| / lambda, so g(a w) = S(a) / (lambda S(w_1));
    # on A_0 -> A_0 transitions this is exactly 1 / lambda
    _, gf = lebesgue10
    S = np.diff(coding.s_bounds, axis=1)[:, 0]
    W = gf.words
    np.testing.assert_allclose(gf.values, S[W[:, 0]] / (GOLDEN * S[W[:, 1]]), rtol=1e-8)
    z = coding.zero_symbol
    on_zero = (W[:, 0] == z) & (W[:, 1] == z)
    np.testing.assert_allclose(gf.values[on_zero], 1 / GOLDEN, rtol=1e-8)


def test_lebesgue_product_density_geometric_oracle(L, coding, lebesgue10):
    # rho(w-, w+) = lambda^-1 / (U(w_{-1}) * S(zero)) with U, S the eigen-widths of the boxes
    G, _ = lebesgue10
    W, rho, _, _ = product_density_table(G, 3, 3)
    U = np.diff(coding.u_bounds, axis=1)[:, 0]
    S0 = np.diff(coding.s_bounds, axis=1)[coding.zero_symbol, 0]
    oracle = 1.0 / (GOLDEN * U[W[:, 2]] * S0)
    np.testing.assert_allclose(rho, oracle, rtol=1e-3)


# -- weights and invariants -------------------------------------------------------------

def test_weights_sum_and_shift_invariance(gibbs10):
    G, _ = gibbs10
    assert abs(math.fsum(G.weights.tolist()) - 1.0) <= 1e-12
    assert np.all(G.weights > 0)
    m = G.depth
    A = G.table.A
    keys = G.table.keys
    # sum over the first symbol vs over the last symbol, both indexed by the middle (m-1)-word
    tail_key = keys % (A ** (m - 1))
    head_key = keys // A
    u = np.union1d(tail_key, head_key)
    left = np.zeros(len(u))
    right = np.zeros(len(u))
    np.add.at(left, np.searchsorted(u, tail_key), G.weights)
    np.add.at(right, np.searchsorted(u, head_key), G.weights)
    assert np.max(np.abs(left - right)) <= 1e-8


def test_g_normalisation_and_range(gibbs10):
    _, gf = gibbs10
    assert gf.normalization_error() <= 1e-8
    assert np.all(gf.values > 0) and np.all(gf.values <= 1.0 + 1e-12)


def test_g_is_cylinder_ratio(gibbs10):
    G, gf = gibbs10
    W = gf.words[:: max(1, len(gf.words) // 300)]
    ratio = G.cylinder_weights(W) / G.cylinder_weights(W[:, 1:])
    np.testing.assert_allclose(gf(W), ratio, rtol=1e-9)


def test_parry_g_from_left_perron_vector(coding):
    G = gibbs_state(Potential.const(0.0), coding, 6)
    gf = g_function(G)
    lam, l = _perron_left(coding.sft.transition)
    W = gf.words
    np.testing.assert_allclose(gf.values, l[W[:, 0]] / (lam * l[W[:, 1]]), rtol=1e-9)


def test_full_shift_uniform():
    G = equilibrium(np.zeros(len(FULL3.words(4))), FULL3, 4)
    assert G.pressure == pytest.approx(math.log(3), abs=1e-12)
    np.testing.assert_allclose(g_function(G).values, 1 / 3, rtol=1e-12)
    assert G.bowen_constant == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_bernoulli_product_density_is_one(c):
    # psi depends on the first symbol only: the equilibrium state is Bernoulli
    words = FULL3.words(3)
    G = equilibrium(np.asarray(c)[words[:, 0]], FULL3, 3)
    p = np.exp(c) / np.exp(c).sum()
    np.testing.assert_allclose(G.cylinder_weights(words), p[words].prod(axis=1), rtol=1e-9)
    for wm, wp in [((0,), (1, 2)), ((2, 2), (0,)), ((1,), (1,))]:
        assert product_density(G, wm, wp) == pytest.approx(1.0, rel=1e-9)


def test_marginal_identity(gibbs10):
    G, _ = gibbs10
    for p, q in [(2, 3), (4, 4), (3, 6)]:
        assert marginal_identity_error(G, p, q) <= 1e-6


def test_product_density_requires_zero_symbol(gibbs10, coding):
    G, _ = gibbs10
    other = (coding.zero_symbol + 1) % coding.alphabet_size
    with pytest.raises(ValueError):
        product_density(G, (coding.zero_symbol,), (other,))


# -- Bowen property -----------------------------------------------------------------------

def test_bowen_constant_stable(gibbs10, lebesgue10, L):
    for G, pot in [(gibbs10[0], gibbs10[0].potential), (lebesgue10[0], geometric_potential(L))]:
        C, per = bowen_constant(G, pot, orders=range(2, 11), return_all=True)
        assert C >= 1
        assert per[10] / per[6] <= 1.5
        assert G.bowen_constant >= per[10] - 1e-12


def test_bowen_orders_bounded_by_depth(gibbs10):
    with pytest.raises(ValueError):
        bowen_constant(gibbs10[0], orders=(11,))


# -- future-only potential -------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 3, 4, 6])
def test_future_potential_preserves_periodic_sums(L, coding, psi, n):
    # the future-only representative is cohomologous: periodic sums match
    m = 14
    for w in periodic_words(coding, n)[:20]:
        rep = (list(w.symbols) * (m // n + 3))
        words = np.array([rep[j:j + m] for j in range(n)])
        lhs = cylinder_potential(psi, coding, m, words=words).sum()
        x = L.from_eigen(periodic_code_point(coding, w.symbols)) % 1.0
        assert lhs == pytest.approx(birkhoff_sum(psi, L, TorusPoint(*x), n), abs=2e-3 * n)


def test_equilibrium_input_validation():
    with pytest.raises(ValueError):
        equilibrium(np.zeros(3), FULL3, 1)
    with pytest.raises(ValueError):
        equilibrium(np.zeros(5), FULL3, 2)
    with pytest.raises(ValueError):
        equilibrium(np.full(9, np.nan), FULL3, 2)


def test_word_table_lookup():
    W = FULL3.words(3)
    tab = WordTable(W, 3)
    assert np.array_equal(tab.lookup(W), np.arange(len(W)))
    assert len(tab) == 27


def test_json_dump(gibbs10):
    G, _ = gibbs10
    data = json.loads(json.dumps(G.to_json(top_k=5)))
    assert data["depth"] == 10 and len(data["weights"]) == 5
    ws = [e["weight"] for e in data["weights"]]
    assert ws == sorted(ws, reverse=True)


def test_box_area_helper(L):
    assert Box(0, 1, 0, 1).area(L) == pytest.approx(1.0)
