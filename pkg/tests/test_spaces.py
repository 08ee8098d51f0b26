import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from numradius import spaces as sp
from numradius.errors import CapExceeded, DimensionMismatch, NotAState, NotPolyhedral


def test_norm_examples():
    assert sp.norm_of(sp.linf(2), [1, -1]) == 1
    assert sp.norm_of(sp.znorm(2), [1, 0]) == pytest.approx(1 + 1 / math.sqrt(2), abs=1e-12)
    assert sp.norm_of(sp.l2(2), [0.6, 0.8]) == pytest.approx(1, abs=1e-15)


def test_sum_inf_norm_is_max():
    X = sp.sum_inf(sp.l1(2), sp.l2(2))
    assert sp.norm_of(X, [0.5, 0.5, 0.3, 0.4]) == pytest.approx(1.0)
    assert sp.norm_of(X, [0.1, 0.1, 3, 4]) == pytest.approx(5.0)


def test_dual_norm_examples():
    assert sp.dual_norm_of(sp.linf(2), [0.5, 0.5]) == pytest.approx(1)
    assert sp.dual_norm_of(sp.l2(3), [1, 0, 0]) == pytest.approx(1)
    b = sp.dual_norm_bracket(sp.znorm(2), np.array([1.0, 0.0]))
    assert 1 / (1 + 1 / math.sqrt(2)) - 1e-9 <= b.lo <= b.hi <= 1
    assert b.width < 1e-6


def test_znorm_dual_matches_brute_force():
    Z = sp.znorm(2)
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((200_000, 2))
    pts /= sp.norm_of(Z, pts)[:, None]
    for f in ([1.0, 0.0], [0.3, -0.7], [1.0, 1.0]):
        b = sp.dual_norm_bracket(Z, np.array(f))
        brute = float(np.abs(pts @ np.array(f)).max())
        assert brute <= b.hi + 1e-12
        assert b.lo - brute < 1e-3


def test_duality_support_examples():
    assert np.allclose(sp.duality_support(sp.l2(2), [1, 0]), [1, 0])
    assert np.array_equal(sp.duality_support(sp.linf(2), [1, 0.3]), [1, 0])
    x = np.array([1, 1]) / 2 ** (1 / 3)
    f = sp.duality_support(sp.lp(3, 2), x)
    assert np.allclose(f, np.array([1, 1]) / 2 ** (2 / 3))
    assert f @ x == pytest.approx(1)
    assert sp.dual_norm_of(sp.lp(3, 2), f) == pytest.approx(1)


def test_duality_support_tie_break_is_lex_first():
    # (1, 1) lies on two facets of the ℓ_∞² ball; e_1* comes first
    assert np.array_equal(sp.duality_support(sp.linf(2), [1, 1]), [1, 0])
    assert np.array_equal(sp.duality_support(sp.linf(2), [-1, 1]), [-1, 0])


def test_vertices():
    assert {tuple(v) for v in sp.primal_vertices(sp.linf(2))} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    assert {tuple(v) for v in sp.primal_vertices(sp.l1(2))} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert {tuple(v) for v in sp.dual_vertices(sp.linf(2))} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert {tuple(v) for v in sp.dual_vertices(sp.l1(2))} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    with pytest.raises(NotPolyhedral):
        sp.primal_vertices(sp.znorm(2))
    with pytest.raises(NotPolyhedral):
        sp.dual_vertices(sp.l2(2))
    with pytest.raises(CapExceeded):
        sp.primal_vertices(sp.linf(9))


def test_polyhedral_hexagon():
    H = sp.polyhedral([[1, 0], [0, 1], [1, 1]])
    assert len(sp.dual_vertices(H)) == 6
    V = sp.primal_vertices(H)
    assert len(V) == 6
    assert np.allclose(sp.norm_of(H, V), 1)


def test_validate_state_examples():
    X = sp.linf(2)
    sp.validate_state(X, [1, 0], [1, 0])
    sp.validate_state(X, [1, 1], [1, 0])
    with pytest.raises(NotAState) as e:
        sp.validate_state(X, [1, 0], [0, 1])
    assert e.value.violated in ("pairing", "support")
    with pytest.raises(NotAState) as e:
        sp.validate_state(X, [2, 0], [1, 0])
    assert e.value.violated == "norm"


def test_random_state_determinism_and_validity():
    for X in (sp.linf(3), sp.l1(3), sp.l2(3), sp.znorm(2), sp.lp(3, 3), sp.l2(2, "complex")):
        a, b = sp.random_state(X, 42), sp.random_state(X, 42)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.xstar, b.xstar)
        sp.validate_state(X, a.x, a.xstar, tol=1e-12) if X.kind != "znorm" else sp.validate_state(X, a.x, a.xstar, 1e-8)
    s = sp.random_state(sp.l2(3), 7)
    assert np.allclose(s.x, s.xstar)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        sp.norm_of(sp.l2(3), [1, 0])


def test_json_roundtrip():
    for X in (sp.linf(3), sp.lp(3, 2, "complex"), sp.znorm(4), sp.polyhedral([[1, 0], [0, 1], [1, 1]]),
              sp.sum_inf(sp.linf(2), sp.znorm(2)), sp.dual(sp.znorm(2))):
        assert sp.space_from_json(sp.space_to_json(X)) == X
    v = np.array([1 + 2j, -0.5j])
    assert np.array_equal(sp.vector_from_json(sp.vector_to_json(v), sp.l2(2, "complex")), v)


def test_dual_of_dual():
    assert sp.dual(sp.dual(sp.znorm(3))) == sp.znorm(3)
    assert sp.dual(sp.linf(2)) == sp.l1(2)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]),
       st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3))
def test_duality_support_is_a_state(p, xs):
    X = sp.lp(p, 3)
    x = np.array(xs)
    if np.abs(x).max() < 1e-3:
        return
    x = x / sp.norm_of(X, x)
    f = sp.duality_support(X, x)
    sp.validate_state(X, x, f, tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3))
def test_holder_inequality(xs, fs):
    for X in (sp.lp(3, 3), sp.linf(3), sp.l1(3), sp.polyhedral([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])):
        x, f = np.array(xs), np.array(fs)
        assert abs(f @ x) <= sp.dual_norm_of(X, f) * sp.norm_of(X, x) * (1 + 1e-9) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=2))
def test_norm_triangle_and_homogeneity(xs):
    Z = sp.znorm(2)
    x = np.array(xs)
    y = np.array([0.3, -1.2])
    assert sp.norm_of(Z, x + y) <= sp.norm_of(Z, x) + sp.norm_of(Z, y) + 1e-12
    assert sp.norm_of(Z, -2.5 * x) == pytest.approx(2.5 * sp.norm_of(Z, x), abs=1e-12)
