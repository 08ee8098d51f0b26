import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from numradius import spaces as sp
from numradius.errors import DimensionMismatch
from numradius.operators import Operator, adjoint, apply, hermitian_split, map_norm, operator_norm


def test_apply_examples():
    X = sp.l2(2)
    assert np.array_equal(apply(Operator.identity(X), [1, 2]), [1, 2])
    assert np.array_equal(apply(Operator(np.diag([2.0, 0.0]), X), [0, 1]), [0, 0])
    assert np.array_equal(apply(Operator([[0, 1], [-1, 0]], X), [1, 0]), [0, -1])


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        Operator(np.eye(3), sp.l2(2))
    with pytest.raises(DimensionMismatch):
        apply(Operator.identity(sp.l2(2)), [1, 2, 3])


def test_operator_norm_examples():
    for X in (sp.linf(2), sp.l1(3), sp.l2(2), sp.znorm(2), sp.lp(3, 2), sp.sum_inf(sp.linf(1), sp.l2(2))):
        assert operator_norm(Operator.identity(X)).contains(1.0, 1e-9)
    assert operator_norm(Operator(np.diag([2.0, -1.0]), sp.linf(2))).hi == 2.0


def test_linf3_norm_matches_sign_enumeration():
    rng = np.random.default_rng(3)
    signs = np.array(list(itertools.product((1, -1), repeat=3)), dtype=float)
    for _ in range(20):
        A = rng.standard_normal((3, 3))
        brute = np.abs(signs @ A.T).max()
        b = operator_norm(Operator(A, sp.linf(3)))
        assert b.lo == b.hi == pytest.approx(brute, abs=1e-14)


def test_adjoint_examples():
    X = sp.l2(2)
    assert adjoint(Operator.identity(X)) == Operator.identity(sp.dual(X))
    assert np.array_equal(adjoint(Operator([[0, 1], [0, 0]], X)).entries, [[0, 0], [1, 0]])
    assert adjoint(Operator.identity(sp.linf(2))).space == sp.l1(2)


def test_hermitian_split_examples():
    X = sp.l2(2)
    H, G = hermitian_split(Operator([[1, 2], [2, 3]], X))
    assert np.array_equal(H.entries, [[1, 2], [2, 3]]) and not G.entries.any()
    H, G = hermitian_split(Operator([[0, 1], [-1, 0]], X))
    assert not H.entries.any() and np.array_equal(G.entries, [[0, 1], [-1, 0]])


def test_znorm_operator_norm_is_certified_bracket():
    Z = sp.znorm(2)
    A = np.array([[1.0, 0.5], [0.2, -1.0]])
    b = operator_norm(Operator(A, Z), seed=0)
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((100_000, 2))
    brute = (sp.norm_of(Z, pts @ A.T) / sp.norm_of(Z, pts)).max()
    # sampling only bounds the norm from below
    assert brute <= b.hi + 1e-12
    assert b.lo - brute < 1e-3
    assert b.width < 1e-4


def test_map_norm_between_spaces():
    # ‖Id: ℓ_1² → ℓ_2²‖ = 1 and ‖Id: ℓ_2² → ℓ_1²‖ = √2
    assert map_norm(np.eye(2), sp.l1(2), sp.l2(2)).contains(1.0, 1e-12)
    assert map_norm(np.eye(2), sp.l2(2), sp.l1(2)).contains(np.sqrt(2), 1e-6)


def test_cache_and_immutability():
    T = Operator(np.eye(2), sp.linf(2))
    assert operator_norm(T) is operator_norm(T)
    with pytest.raises(ValueError):
        T.entries[0, 0] = 5


def test_json_roundtrip():
    for T in (Operator([[1, 2], [3, 4]], sp.linf(2)), Operator([[1j, 2], [3, -4j]], sp.l2(2, "complex"))):
        assert Operator.from_dict(T.to_dict()) == T


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4))
def test_norm_is_submultiplicative(vals):
    X = sp.linf(2)
    A = Operator(np.array(vals).reshape(2, 2), X)
    B = Operator([[0.5, -1.0], [2.0, 0.3]], X)
    assert operator_norm(A @ B).hi <= operator_norm(A).hi * operator_norm(B).hi + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=9, max_size=9))
def test_adjoint_norm_equal(vals):
    A = np.array(vals).reshape(3, 3)
    for X in (sp.linf(3), sp.l1(3), sp.l2(3)):
        T = Operator(A, X)
        assert operator_norm(adjoint(T)).hi == pytest.approx(operator_norm(T).hi, rel=1e-12, abs=1e-12)
