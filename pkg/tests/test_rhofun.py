from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from temperlab.matgroup import (
    BlockReductive,
    DiagonalTorus,
    UpperUnipotent,
    coroot,
    lie_algebra_basis,
    sl_basis,
    split_cartan_basis,
    structure_action,
)
from temperlab.rhofun import (
    RhoFunction,
    SpectrumError,
    adjoint_weight_system,
    lipschitz_bound,
    rho_eval,
    rho_eval_batch,
    rho_of_matrix,
)
from temperlab.rootdata import Weight, WeightSystem, restrict_weights, restricted_roots, rho_form


def multiset(ws: WeightSystem) -> dict:
    out = {tuple(Fraction(c) for c in w.covector): w.multiplicity for w in ws.weights}
    out["zero"] = ws.zero_multiplicity
    return out


SL2 = WeightSystem(1, (Weight((2,), 1), Weight((-2,), 1)))
SL3_ON_LINE = restrict_weights(restricted_roots(3), [[1], [-1], [0]])
ASYMMETRIC = WeightSystem(2, (Weight((1, 2), 1), Weight((-3, 1), 2)))


def test_rho_eval_examples():
    assert rho_eval(SL2, (0,)) == 0
    assert rho_eval(SL2, (Fraction(1),)) == 2
    assert rho_eval(SL3_ON_LINE, (Fraction(1),)) == 4
    assert isinstance(rho_eval(SL3_ON_LINE, (Fraction(1),)), Fraction)
    assert RhoFunction(SL2)((0.5,)) == pytest.approx(1.0)


def test_rho_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        rho_eval(SL2, (1, 2))


@given(st.lists(st.integers(min_value=-20, max_value=20), min_size=2, max_size=2))
def test_rho_symmetric_under_sign_flip(xs):
    ws = restrict_weights(restricted_roots(3), [[1, 0], [-1, 1], [0, -1]])
    x = tuple(Fraction(v) for v in xs)
    assert rho_eval(ws, tuple(-v for v in x)) == rho_eval(ws, x)


@given(st.lists(st.integers(min_value=-20, max_value=20), min_size=2, max_size=2),
       st.fractions(min_value=0, max_value=10))
def test_rho_homogeneous_for_asymmetric_systems(xs, t):
    x = tuple(Fraction(v) for v in xs)
    assert rho_eval(ASYMMETRIC, tuple(t * v for v in x)) == t * rho_eval(ASYMMETRIC, x)


@pytest.mark.parametrize("ws", [SL3_ON_LINE, restrict_weights(restricted_roots(4), [[1, 0], [-1, 1], [0, -1], [0, 0]]),
                                ASYMMETRIC])
def test_rho_convex_on_random_pairs(ws):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(10_000, ws.dim)) * 3
    y = rng.normal(size=(10_000, ws.dim)) * 3
    mid = rho_eval_batch(ws, (x + y) / 2)
    avg = (rho_eval_batch(ws, x) + rho_eval_batch(ws, y)) / 2
    assert np.all(mid <= avg + 1e-12)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_self_weights_of_slk_give_twice_rho(k):
    ws = adjoint_weight_system(sl_basis(k), [coroot(k, i, i + 1) for i in range(k - 1)], "self")
    rng = np.random.default_rng(k)
    for _ in range(20):
        gaps = [Fraction(int(g)) for g in rng.integers(0, 5, size=k - 1)]
        # dominant X with X_i - X_{i+1} = gaps[i]; coroot coordinates are cumulative sums
        xs = [Fraction(0)]
        for g in gaps:
            xs.append(xs[-1] - g)
        mean = sum(xs) / k
        xs = [v - mean for v in xs]
        y = [sum(xs[: i + 1]) for i in range(k - 1)]
        two_rho = 2 * sum(r * v for r, v in zip(rho_form(k), xs))
        assert rho_eval(ws, tuple(y)) == two_rho


def test_rho_of_matrix_examples():
    assert rho_of_matrix(np.triu(np.ones((4, 4)), 1)) == 0.0
    assert rho_of_matrix(np.array([[0.0, 1.0], [-1.0, 0.0]])) == pytest.approx(0.0, abs=1e-15)
    ad = structure_action(sl_basis(2), np.diag([1.0, -1.0]))
    assert ad.shape == (3, 3)
    # independent eigenvalue oracle: ad(diag(1, -1)) has eigenvalues 2, -2, 0
    assert sorted(np.linalg.eigvals(ad).real) == pytest.approx([-2.0, 0.0, 2.0], abs=1e-12)
    assert rho_of_matrix(ad) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rho_of_matrix(np.ones((2, 3)))


@pytest.mark.parametrize("spec", [BlockReductive(3, ((0, 2),)), BlockReductive(4, ((0, 3),)), DiagonalTorus(3)])
def test_rho_of_matrix_agrees_with_adjoint_weights(spec):
    cartan = split_cartan_basis(spec)
    n = cartan[0].shape[0]
    for where, space in (("self", lie_algebra_basis(spec)), ("ambient", sl_basis(n))):
        ws = adjoint_weight_system(lie_algebra_basis(spec), cartan, where)
        rng = np.random.default_rng(3)
        for y in rng.normal(size=(100, len(cartan))):
            mat = sum(c * b for c, b in zip(y, cartan))
            assert rho_of_matrix(structure_action(space, mat)) == pytest.approx(rho_eval(ws, tuple(y)), abs=1e-7)


def test_lipschitz_bound_examples():
    assert lipschitz_bound(WeightSystem(2, ())) == 0.0
    assert lipschitz_bound(SL2) == pytest.approx(2.0)


@pytest.mark.parametrize("ws", [SL2, SL3_ON_LINE, ASYMMETRIC])
def test_lipschitz_bound_holds_on_random_pairs(ws):
    rng = np.random.default_rng(11)
    x = rng.normal(size=(10_000, ws.dim))
    y = rng.normal(size=(10_000, ws.dim))
    lhs = np.abs(rho_eval_batch(ws, x) - rho_eval_batch(ws, y))
    rhs = lipschitz_bound(ws) * np.linalg.norm(x - y, axis=1)
    assert np.all(lhs <= rhs + 1e-12)


def test_adjoint_weights_examples():
    torus = DiagonalTorus(3)
    ws = adjoint_weight_system(lie_algebra_basis(torus), split_cartan_basis(torus), "self")
    assert ws.weights == () and ws.zero_multiplicity == 2

    block = BlockReductive(3, ((0, 2),))
    own = adjoint_weight_system(lie_algebra_basis(block), split_cartan_basis(block), "self")
    amb = adjoint_weight_system(lie_algebra_basis(block), split_cartan_basis(block), "ambient")
    assert multiset(own) == {(Fraction(2),): 1, (Fraction(-2),): 1, "zero": 1}
    assert multiset(amb) == {(Fraction(2),): 1, (Fraction(-2),): 1, (Fraction(1),): 2, (Fraction(-1),): 2, "zero": 2}
    assert multiset(amb) == multiset(SL3_ON_LINE)

    nil = UpperUnipotent(2)
    ws = adjoint_weight_system(lie_algebra_basis(nil), split_cartan_basis(nil), "self")
    assert ws.dim == 0 and ws.weights == ()


def test_adjoint_weights_reject_bad_families():
    e12 = np.zeros((2, 2))
    e12[0, 1] = 1.0
    with pytest.raises(SpectrumError):
        adjoint_weight_system(sl_basis(2), [np.diag([1.0, -1.0]), e12 + e12.T], "ambient")
    with pytest.raises(SpectrumError):
        # rotation generator: imaginary spectrum
        adjoint_weight_system(sl_basis(2), [e12 - e12.T], "ambient")
    with pytest.raises(ValueError):
        adjoint_weight_system(sl_basis(2), [np.diag([1.0, -1.0])], "elsewhere")


def test_irrational_weights_stay_floating():
    ws = adjoint_weight_system(sl_basis(2), [np.diag([np.sqrt(2), -np.sqrt(2)])], "ambient")
    assert not ws.exact
