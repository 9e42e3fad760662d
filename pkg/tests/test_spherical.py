from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ellipkm1

from temperlab.harmonic import (
    QuadratureConfig,
    UnsupportedDimensionError,
    check_spherical_bounds,
    check_weyl_invariance,
    spherical,
)
from temperlab.harmonic.spherical import spherical_mc
from temperlab.matgroup import random_orthogonal


def a_t(t):
    return np.diag([math.exp(t), math.exp(-t)])


def xi_zero_closed_form(t):
    """Xi_0(a_t) = (2 / pi) K(1 - e^{-4t}) e^{-t}: the K-integral of |a_t^-1 u|^-1 is elliptic."""
    return 2 / math.pi * float(ellipkm1(math.exp(-4 * t))) * math.exp(-t)


def xi_quad(c, g):
    """Adaptive quadrature of the circle integral of |g^-1 u|^-(c + 1)."""
    gi = np.linalg.inv(g)

    def f(phi):
        v = gi @ np.array([math.cos(phi), math.sin(phi)])
        return float(np.linalg.norm(v)) ** (-(c + 1)) / (2 * math.pi)

    val, _ = quad(f, 0, 2 * math.pi, limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


@pytest.mark.parametrize("chi", [0.0, 0.3, 1.0, -0.7, (2.0, -0.5)])
def test_value_at_identity_is_one(chi):
    assert spherical(chi, np.eye(2)) == pytest.approx(1.0, abs=1e-9)


def test_value_at_rotations_is_one(rng):
    for k in random_orthogonal(rng, 2, 5):
        assert spherical(0.4, k) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("t", [0.1, 0.5, 2.0, 5.0, 9.0])
def test_xi_zero_matches_elliptic_closed_form(t):
    assert spherical(0.0, a_t(t)) == pytest.approx(xi_zero_closed_form(t), rel=1e-9)


@pytest.mark.parametrize("t", [0.0, 1.0, 3.0, 8.0])
def test_xi_rho_is_identically_one(t):
    # int dphi / (a^2 cos^2 + b^2 sin^2) = 2 pi / (a b), and a b = 1
    assert spherical(1.0, a_t(t)) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("c,t", [(0.3, 1.0), (0.5, 2.0), (-0.4, 1.5), (0.8, 0.3)])
def test_spherical_against_adaptive_quadrature(c, t, rng):
    k = random_orthogonal(rng, 2)
    g = k @ a_t(t)
    assert spherical(c, g) == pytest.approx(xi_quad(c, g), rel=1e-8)


def test_lower_bound_for_chi_rho():
    ts = np.linspace(0, 8, 17)
    # (chi - rho)(kappa) vanishes for chi = rho, so the bound reads Xi >= 1
    assert all(spherical(1.0, a_t(t)) >= 1 - 1e-9 for t in ts)


def test_spherical_n3_by_monte_carlo():
    cfg = QuadratureConfig(mc_samples=20_000, seed=2)
    assert spherical(0.0, np.eye(3), cfg) == pytest.approx(1.0, abs=1e-12)
    g = np.diag([math.exp(1.0), 1.0, math.exp(-1.0)])
    mean, se = spherical_mc(0.0, g, cfg)
    assert 0 < mean < 1 and se > 0


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimensionError):
        spherical(0.0, np.eye(4))


# ---------------------------------------------------------------------------
# Weyl invariance
# ---------------------------------------------------------------------------


def test_weyl_discrepancy_exactly_zero_for_chi_zero():
    rep = check_weyl_invariance(0.0, sample_count=8)
    assert rep.observed_max == 0.0
    assert rep.passed


def test_weyl_discrepancy_small_at_default_nodes():
    rep = check_weyl_invariance(0.3, sample_count=16)
    assert rep.observed_max <= 1e-5 and rep.passed


def test_weyl_discrepancy_at_a2_against_doubled_nodes():
    g = a_t(2.0)
    for nodes in (2048, 4096):
        cfg = QuadratureConfig(node_count=nodes)
        a = spherical(0.3, g, cfg)
        b = spherical(-0.3, g, cfg)
        assert abs(a - b) / a <= 1e-5
    assert spherical(0.3, g) == pytest.approx(spherical(0.3, g, QuadratureConfig(node_count=4096)), rel=1e-10)


def test_weyl_discrepancy_decreases_with_nodes():
    values = [check_weyl_invariance(0.3, sample_count=4, cfg=QuadratureConfig(node_count=k)).observed_max
              for k in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# Two-sided bounds
# ---------------------------------------------------------------------------


def test_bounds_chi_zero():
    rep = check_spherical_bounds(0.0, (1.0, -1.0), t_max=10.0)
    q = np.array([row[1] for row in rep.series])
    ts = np.array([row[0] for row in rep.series])
    assert q[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(q >= 1 - 1e-6)
    # at most linear growth for rank one
    assert np.all(q <= 2.0 * (1 + ts))
    assert rep.details["fitted_degree"] <= 2
    assert rep.passed


def test_bounds_chi_half_rho_bounded():
    rep = check_spherical_bounds(0.5, (1.0, -1.0), t_max=10.0)
    q = np.array([row[1] for row in rep.series])
    assert np.all(q >= 1 - 1e-6)
    assert np.max(q) <= 10.0
    assert rep.passed


def test_bounds_validation():
    with pytest.raises(ValueError):
        check_spherical_bounds(0.0, (-1.0, 1.0))
    with pytest.raises(ValueError):
        check_spherical_bounds((-1.0, 1.0), (1.0, -1.0))
    with pytest.raises(UnsupportedDimensionError):
        check_spherical_bounds(0.0, (1.0, 0.0, -1.0))
