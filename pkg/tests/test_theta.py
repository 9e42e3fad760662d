from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from temperlab.delta_estimator import enumerate_ball
from temperlab.harmonic import QuadratureConfig, ThetaEstimate, UnsupportedDimensionError, estimate_theta_ray
from temperlab.harmonic.theta import (
    _cartan_window,
    _chart_of,
    _discrete_sum,
    _torus_measure,
    _unipotent_measure,
    box_cartan_reach,
)
from temperlab.matgroup import (
    BlockReductive,
    CatalogName,
    ChartBox,
    DiagonalTorus,
    DiscreteGenerators,
    GroupElement,
    UpperUnipotent,
    bruhat_compose,
    cartan_projection_batch,
    sample_chart_range,
)

SMALL = QuadratureConfig(mc_samples=50_000, t_points=12)


def probe_points(box: ChartBox, count: int, t: float, ray, seed: int = 9):
    """Points a_t y with y in the box (where the inner measures are evaluated)."""
    ys = bruhat_compose(sample_chart_range(box, 0, count, seed), box.n)
    a = np.exp(t * np.asarray(ray, dtype=float))
    return a[None, :, None] * ys


def torus_oracle_n2(box, x, grid=np.linspace(-3, 3, 30001)):
    mats = x[None] * np.stack([np.exp(-grid), np.exp(grid)], axis=1)[:, None, :]
    return float(np.sum(box.contains_matrices(mats))) * (grid[1] - grid[0])


def torus_oracle_n3(box, x, step=0.01, span=2.0):
    s = np.arange(-span, span, step) + step / 2
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    d = np.stack([np.exp(-s1), np.exp(-s2), np.exp(s1 + s2)], axis=-1).reshape(-1, 3)
    mats = x[None] * d[:, None, :]
    return float(np.sum(box.contains_matrices(mats))) * step * step


def unipotent_oracle_n2(box, x, grid=np.linspace(-4, 4, 40001)):
    inv = np.zeros((len(grid), 2, 2))
    inv[:, 0, 0] = inv[:, 1, 1] = 1.0
    inv[:, 0, 1] = -grid
    return float(np.sum(box.contains_matrices(x[None] @ inv))) * (grid[1] - grid[0])


# ---------------------------------------------------------------------------
# Inner measures against brute-force membership
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0])
def test_torus_measure_n2_against_grid(t):
    box = ChartBox.cube(2, 0.5)
    xs = probe_points(box, 40, t, (1.0, -1.0))
    coords, good = _chart_of(xs)
    got = _torus_measure(box, coords, good)
    for x, value in zip(xs, got):
        assert value == pytest.approx(torus_oracle_n2(box, x), abs=1e-3)


def test_torus_measure_n3_against_grid():
    box = ChartBox.cube(3, 0.5)
    xs = probe_points(box, 12, 0.2, (1.0, 0.0, -1.0))
    coords, good = _chart_of(xs)
    got = _torus_measure(box, coords, good)
    oracle = np.array([torus_oracle_n3(box, x) for x in xs])
    assert np.sum(oracle) > 0
    # the s1 direction uses a midpoint rule, the s2 direction is exact
    assert np.sum(got) == pytest.approx(np.sum(oracle), rel=0.03)
    assert np.max(np.abs(got - oracle)) <= 0.05 * np.max(oracle)


@pytest.mark.parametrize("t", [0.0, 0.4])
def test_unipotent_measure_n2_against_grid(t):
    box = ChartBox.cube(2, 0.5)
    xs = probe_points(box, 40, t, (1.0, -1.0))
    coords, good = _chart_of(xs)
    got = _unipotent_measure(box, coords, good)
    for x, value in zip(xs, got):
        assert value == pytest.approx(unipotent_oracle_n2(box, x), abs=1e-3)


def test_discrete_window_does_not_drop_terms():
    box = ChartBox.cube(2, 0.5)
    ball = enumerate_ball(DiscreteGenerators((GroupElement([[0, -1], [1, 0]]), GroupElement([[1, 1], [0, 1]]))), 12)
    kappa = cartan_projection_batch(ball.matrices)
    reach = 2.0 * box_cartan_reach(box)
    for t in (0.0, 0.8):
        xs = probe_points(box, 200, t, (1.0, -1.0))
        keep = _cartan_window(kappa, t * np.array([1.0, -1.0]), reach)
        windowed = _discrete_sum(box, xs, ball.matrices[keep])
        full = _discrete_sum(box, xs, ball.matrices)
        assert np.array_equal(windowed, full)
        assert keep.sum() < len(ball)


def test_box_reach_bounds_sampled_cartan_norms():
    for n in (2, 3):
        box = ChartBox.cube(n, 0.5)
        kappa = cartan_projection_batch(bruhat_compose(sample_chart_range(box, 0, 20_000, 1), n))
        assert np.max(np.abs(kappa)) <= box_cartan_reach(box)


# ---------------------------------------------------------------------------
# Fitted exponents
# ---------------------------------------------------------------------------


def test_torus_sl2_coefficient_decay():
    est = estimate_theta_ray(DiagonalTorus(2), (1.0, -1.0), t_max=4.0, cfg=QuadratureConfig(mc_samples=200_000))
    assert est.status == "ok"
    values = np.array(est.values)
    assert np.all(values > 0)
    assert "nonmonotone" not in est.flags
    # c(t) ~ exp(-2t) for a compactly supported vector
    assert est.slope == pytest.approx(-2.0, abs=0.1)
    assert 0.0 <= est.theta_hat <= 0.1
    assert est.p == pytest.approx(2.0)


def test_trivial_group_theta_small():
    est = estimate_theta_ray(DiscreteGenerators((GroupElement.identity(2, exact=True),)), (1.0, -1.0),
                             t_max=3.0, cfg=SMALL)
    assert est.theta_hat is not None and est.theta_hat <= 0.1
    assert "compact-support" in est.flags


def test_unipotent_coefficient_has_compact_support():
    est = estimate_theta_ray(UpperUnipotent(2), (1.0, -1.0), t_max=3.0, cfg=SMALL)
    assert "compact-support" in est.flags
    assert est.theta_hat == 0.0 and est.status == "ok"


def test_h_equals_g_theta_one():
    est = estimate_theta_ray(BlockReductive(2, ((0, 2),)), (1.0, -1.0), cfg=SMALL)
    assert est.theta_hat == pytest.approx(1.0)
    assert est.p == math.inf
    assert len(set(est.values)) == 1


def test_catalog_name_resolves():
    est = estimate_theta_ray(CatalogName("torus-in-sl2"), (1.0, -1.0), t_max=2.0, cfg=SMALL)
    assert isinstance(est, ThetaEstimate)


def test_truncated_ball_reports_lower_bound():
    gens = DiscreteGenerators((GroupElement([[0, -1], [1, 0]]), GroupElement([[1, 1], [0, 1]])))
    est = estimate_theta_ray(gens, (1.0, -1.0), t_max=1.0, cfg=QuadratureConfig(mc_samples=2000, t_points=4),
                             depth=4)
    assert "ball-truncated" in est.flags
    assert est.status == "lower-bound"


def test_cyclic_group_runs():
    gens = DiscreteGenerators((GroupElement([[2, 0], [0, Fraction(1, 2)]]),))
    est = estimate_theta_ray(gens, (1.0, -1.0), t_max=2.0, cfg=QuadratureConfig(mc_samples=5000, t_points=6),
                             depth=12)
    assert est.theta_hat is not None
    assert 0.0 <= est.theta_hat <= 1.0


def test_block_in_sl3_runs():
    est = estimate_theta_ray(BlockReductive(3, ((0, 2),)), (1.0, 0.0, -1.0), t_max=0.6,
                             cfg=QuadratureConfig(mc_samples=20_000, t_points=4))
    assert est.values[0] > 0
    assert est.to_json()["series"][0]["t"] == 0.0


def test_theta_validation():
    with pytest.raises(UnsupportedDimensionError):
        estimate_theta_ray(DiagonalTorus(4), (1.0, 0.0, 0.0, -1.0))
    with pytest.raises(ValueError):
        estimate_theta_ray(DiagonalTorus(2), (-1.0, 1.0))
    with pytest.raises(ValueError):
        estimate_theta_ray(DiagonalTorus(2), (1.0, 0.0))
    with pytest.raises(ValueError):
        estimate_theta_ray(DiagonalTorus(2), (1.0, -1.0), box=ChartBox.cube(3, 0.5))


def test_theta_json_shape():
    est = estimate_theta_ray(DiagonalTorus(2), (1.0, -1.0), t_max=2.0, cfg=SMALL)
    js = est.to_json()
    assert set(js) >= {"theta_hat", "p", "p_raw", "slope", "residual", "status", "flags", "series"}
    assert len(js["series"]) == SMALL.t_points
