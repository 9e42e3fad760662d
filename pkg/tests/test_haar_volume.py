from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from temperlab.harmonic import (
    MatrixBump,
    QuadratureConfig,
    UnsupportedDimensionError,
    default_bumps,
    haar_crosscheck,
    volume_decay_conjugation,
    volume_growth_bgb,
)
from temperlab.harmonic.haar import kak_to_bruhat_constant, three_integrals
from temperlab.harmonic.volume import (
    _outer_shell_sl2,
    conjugation_members,
    inner_box_sl2,
)
from temperlab.matgroup import ChartBox, bruhat_compose, bruhat_factor, cartan_projection_batch, sample_chart_range


def entry_coordinate_integral(f: MatrixBump, nodes: int = 72) -> float:
    """Oracle: Haar measure da db dc / |a| on g = [[a, b], [c, (1 + b c) / a]], tensor Gauss-Legendre."""
    c0 = f.matrix
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = f.radius
    axes = []
    for centre in (c0[0, 0], c0[0, 1], c0[1, 0]):
        axes.append((centre + r * x, r * w))
    (a, wa), (b, wb), (c, wc) = axes
    aa, bb, cc = np.meshgrid(a, b, c, indexing="ij")
    ww = wa[:, None, None] * wb[None, :, None] * wc[None, None, :]
    mats = np.stack([np.stack([aa, bb], -1), np.stack([cc, (1 + bb * cc) / aa], -1)], -2)
    return float(np.sum(f(mats) * ww / np.abs(aa)))


# ---------------------------------------------------------------------------
# Haar cross-check
# ---------------------------------------------------------------------------


def test_crosscheck_passes_within_one_percent():
    rep = haar_crosscheck(default_bumps())
    assert rep.observed_max <= 0.01 and rep.passed


def test_same_function_twice_gives_exact_agreement():
    f = default_bumps()[1]
    rep = haar_crosscheck([f, f])
    kak, iwa, bru = rep.series[0]
    assert iwa / kak == pytest.approx(1.0, abs=1e-12)
    assert bru / kak == pytest.approx(1.0, abs=1e-12)


def test_scaling_by_seven_is_linear():
    f = default_bumps()[1]
    base = three_integrals(f)
    scaled = three_integrals(f.scaled(7.0))
    for key in base:
        assert scaled[key] == pytest.approx(7.0 * base[key], rel=1e-12)


def test_each_coordinate_system_against_entry_oracle():
    f1, f2 = default_bumps()
    oracle = entry_coordinate_integral(f2) / entry_coordinate_integral(f1)
    v1, v2 = three_integrals(f1), three_integrals(f2)
    for key in v1:
        assert v2[key] / v1[key] == pytest.approx(oracle, rel=2e-3)


def test_calibration_constants_near_one():
    rep = haar_crosscheck(default_bumps())
    for value in rep.details["calibration"].values():
        assert value == pytest.approx(1.0, rel=0.02)
    assert kak_to_bruhat_constant() == pytest.approx(1.0, rel=0.02)


def test_crosscheck_needs_two_functions():
    with pytest.raises(ValueError):
        haar_crosscheck(default_bumps()[:1])


def test_bump_validation():
    with pytest.raises(ValueError):
        MatrixBump(((2.0, 0.0), (0.0, 1.0)), 0.5)
    with pytest.raises(ValueError):
        MatrixBump(((1.0, 0.0), (0.0, 1.0)), 0.0)


# ---------------------------------------------------------------------------
# Volume decay under conjugation
# ---------------------------------------------------------------------------


def test_membership_symmetry():
    box = ChartBox.cube(2, 0.3)
    coords = sample_chart_range(box, 0, 5000, seed=1)
    mats = bruhat_compose(coords, 2)
    a = np.array([math.exp(0.4), math.exp(-0.4)])
    got = conjugation_members(box, mats, a)
    # direct route: factor a^-1 x a and test the box
    conj = np.diag(1 / a) @ mats @ np.diag(a)
    back, signs, ok = bruhat_factor(conj)
    direct = ok & np.all(signs > 0, axis=1) & box.contains(back)
    assert np.array_equal(got, direct)
    assert 0 < got.sum() < len(got)


def test_decay_normalized_value_is_box_volume():
    # conjugation scales the nbar coordinate by e^{-2t}, so the normalized volume is exactly nu(B)
    w = 0.3
    box = ChartBox.cube(2, w)
    nu_b = (2 * w) ** 2 * math.sinh(2 * w)
    rep = volume_decay_conjugation(box, (1.0, -1.0), t_max=3.0, cfg=QuadratureConfig(mc_samples=200_000, t_points=7))
    for t, value, se in rep.series:
        assert abs(value - nu_b) <= 3 * se + 1e-12, (t, value, se)
    assert rep.details["box_volume_haar_t0"] == pytest.approx(nu_b, rel=0.02)
    assert rep.passed


def test_decay_rejects_box_outside_cell():
    box = ChartBox(2, (-0.3, -0.3, -0.3), (0.3, 0.3, 0.3))
    with pytest.raises(ValueError):
        volume_decay_conjugation(box, (-1.0, 1.0), cfg=QuadratureConfig(mc_samples=100))


def test_decay_n3_runs():
    rep = volume_decay_conjugation(ChartBox.cube(3, 0.3), (1.0, 0.0, -1.0), t_max=2.0,
                                   cfg=QuadratureConfig(mc_samples=50_000, t_points=5))
    assert rep.passed
    assert rep.observed_min > 0


# ---------------------------------------------------------------------------
# Volume growth of double cosets
# ---------------------------------------------------------------------------


def test_growth_bounds_at_zero_positive_and_finite():
    rep = volume_growth_bgb((1.0, -1.0), t_max=8.0)
    t0, outer, inner = rep.series[0]
    assert t0 == 0.0
    assert 0 < inner < outer < math.inf


def test_inner_below_outer_everywhere():
    rep = volume_growth_bgb((1.0, -1.0), t_max=8.0)
    assert all(inner <= outer for _, outer, inner in rep.series)
    assert rep.passed


def test_outer_window_on_late_times():
    rep = volume_growth_bgb((1.0, -1.0), t_max=8.0)
    late = [outer for t, outer, _ in rep.series if t >= 1.0]
    assert max(late) / min(late) <= 50


def test_outer_shell_against_numerical_integral():
    for centre, radius in ((0.0, 1.4), (3.0, 1.4), (0.5, 1.0)):
        lo = max(0.0, centre - radius)
        val, _ = quad(lambda x: math.sinh(2 * x), lo, centre + radius)
        assert _outer_shell_sl2(centre, radius) == pytest.approx(val, rel=1e-12)


def test_inner_box_stays_in_the_ball():
    r = 1.0
    hu, ha, hv = inner_box_sl2(r)
    rng = np.random.default_rng(4)
    pts = rng.uniform(-1, 1, size=(20_000, 3)) * np.array([hu, ha, hv])
    kappa = cartan_projection_batch(bruhat_compose(pts, 2))
    assert np.max(np.linalg.norm(kappa, axis=1)) <= r


def test_growth_validation():
    with pytest.raises(ValueError):
        volume_growth_bgb((1.0, -1.0), r=0.0)
    with pytest.raises(UnsupportedDimensionError):
        volume_growth_bgb((1.0, 0.0, -1.0))
