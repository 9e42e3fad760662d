"""Spherical functions Xi_chi(g) = int_K exp(-(chi + rho) eta(g^-1 k)) dk.

For SL(2) the K-integral is one-dimensional: eta(x)_1 = log |x e_1|, so
the integrand is |g^-1 u|^-(c + 1) over unit vectors u, with c = chi_1 - chi_2.
At large |kappa(g)| it concentrates on an arc of width ~ exp(-2|kappa|).
The trapezoid rule is therefore applied after the substitution
tan(phi) = w sinh(v), with phi measured from the contracting direction
of g^-1 and w the ratio of its singular values; the substituted
integrand is analytic and decays like exp(-|v|).  For SL(3) the
integral is a Monte-Carlo average over Haar-random rotations.
"""

from __future__ import annotations

import math

import numpy as np

from temperlab.harmonic.report import QuadratureConfig, VerificationReport
from temperlab.matgroup import (
    CartanVector,
    as_matrix,
    cartan_projection,
    iwasawa_batch,
    random_orthogonal,
    rotation2,
)
from temperlab.rootdata import rho_form


class UnsupportedDimensionError(ValueError):
    pass


def rho_vector(n: int) -> np.ndarray:
    return np.array([float(c) for c in rho_form(n)])


def as_covector(chi, n: int) -> np.ndarray:
    """A covector on the diagonal; a scalar c stands for c * rho."""
    if np.isscalar(chi):
        return float(chi) * rho_vector(n)
    arr = np.asarray(chi, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"covector must have {n} entries")
    return arr


def _log_integrand_sl2(c: float, w: float, log_smin: float, v: np.ndarray) -> np.ndarray:
    log_cosh = np.logaddexp(v, -v) - math.log(2.0)
    # log(1 + w^2 sinh^2 v) without overflow
    av = np.abs(v)
    with np.errstate(divide="ignore"):
        log_ws = math.log(w) + av + np.log1p(-np.exp(-2.0 * av)) - math.log(2.0)
    log_q = np.logaddexp(0.0, 2.0 * log_ws)
    return math.log(w) - (c + 1.0) * log_smin - c * log_cosh + 0.5 * (c - 1.0) * log_q


def spherical_sl2(c: float, g, node_count: int = 2048, truncation: float = 40.0) -> float:
    """Xi for SL(2) with chi = c rho, by the stretched trapezoid rule."""
    m = np.linalg.inv(as_matrix(g))
    s = np.linalg.svd(m, compute_uv=False)
    smax, smin = float(s[0]), float(s[1])
    w = smin / smax
    span = math.log(2.0 / w) + truncation
    v = np.linspace(-span, span, node_count)
    h = v[1] - v[0]
    logs = _log_integrand_sl2(c, w, math.log(smin), v)
    top = float(np.max(logs))
    wts = np.full(node_count, h)
    wts[0] = wts[-1] = h / 2
    return math.exp(top) * float(np.sum(wts * np.exp(logs - top))) / math.pi


def spherical_sl2_circle(c: float, g, node_count: int) -> float:
    """Plain equispaced trapezoid over the circle (reference for mild g)."""
    m = np.linalg.inv(as_matrix(g))
    theta = 2 * math.pi * np.arange(node_count) / node_count
    k = rotation2(theta)
    eta = iwasawa_batch(m[None] @ k)
    return float(np.mean(np.exp(-(c + 1.0) * eta[:, 0])))


def spherical_mc(chi, g, cfg: QuadratureConfig):
    """Monte-Carlo value and standard error over Haar-random rotations."""
    m = np.linalg.inv(as_matrix(g))
    n = m.shape[0]
    form = as_covector(chi, n) + rho_vector(n)
    rng = np.random.default_rng([cfg.seed, 17])
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < cfg.mc_samples:
        size = min(1 << 15, cfg.mc_samples - done)
        k = random_orthogonal(rng, n, size)
        vals = np.exp(-(iwasawa_batch(m[None] @ k) @ form))
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += size
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0)
    return mean, math.sqrt(var / done)


def spherical(chi, g, cfg: QuadratureConfig | None = None) -> float:
    """Xi_chi(g) with Haar measure on K normalized to total mass 1."""
    cfg = QuadratureConfig() if cfg is None else cfg
    n = as_matrix(g).shape[0]
    if n == 2:
        cov = as_covector(chi, 2)
        return spherical_sl2(float(cov[0] - cov[1]), g, cfg.node_count, cfg.truncation)
    if n == 3:
        return spherical_mc(chi, g, cfg)[0]
    raise UnsupportedDimensionError("spherical functions are implemented for n = 2 and n = 3")


def weyl_reflect_sl2(chi) -> np.ndarray:
    cov = as_covector(chi, 2)
    return cov[::-1].copy()


def random_sl2(rng: np.random.Generator, t_max: float) -> np.ndarray:
    th = rng.uniform(0, 2 * math.pi, size=2)
    t = rng.uniform(0, t_max)
    return rotation2(th[0]) @ np.diag([math.exp(t), math.exp(-t)]) @ rotation2(th[1])


def check_weyl_invariance(chi, sample_count: int = 16, cfg: QuadratureConfig | None = None,
                          t_max: float = 4.0, tolerance: float = 1e-5) -> VerificationReport:
    """max over sampled g of |Xi_chi(g) - Xi_{w chi}(g)| / Xi_chi(g) for SL(2)."""
    cfg = QuadratureConfig() if cfg is None else cfg
    rng = np.random.default_rng(cfg.seed)
    chi_w = weyl_reflect_sl2(chi)
    rows = []
    worst = 0.0
    for i in range(sample_count):
        g = random_sl2(rng, t_max)
        a = spherical(chi, g, cfg)
        b = spherical(chi_w, g, cfg)
        d = abs(a - b) / a
        worst = max(worst, d)
        rows.append((float(cartan_projection(g)[0]), d))
    return VerificationReport(
        check="weyl-invariance",
        rule="max<=",
        tolerance=tolerance,
        observed_min=min(r[1] for r in rows) if rows else 0.0,
        observed_max=worst,
        parameters={"chi": [float(x) for x in as_covector(chi, 2)], "t_max": t_max, "samples": sample_count,
                    "node_count": cfg.node_count},
        seed=cfg.seed,
        samples=sample_count,
        series=tuple(rows),
        series_labels=("kappa_1", "relative_discrepancy"),
    )


def check_spherical_bounds(chi, ray, t_max: float = 10.0, cfg: QuadratureConfig | None = None,
                           lower_tol: float = 1e-6) -> VerificationReport:
    """q(t) = Xi_chi(exp(t ray)) exp(-(chi - rho)(t ray)) against its two bounds.

    Lower part: q >= 1 - lower_tol on the grid.  Upper part: log q / log t
    at most rank + 1 on [2, t_max]; the least-squares degree is reported.
    """
    cfg = QuadratureConfig() if cfg is None else cfg
    x = np.asarray(ray.coords if isinstance(ray, CartanVector) else ray, dtype=float)
    n = len(x)
    if n != 2:
        raise UnsupportedDimensionError("spherical bounds are checked for n = 2")
    if np.any(np.diff(x) >= 0):
        raise ValueError("ray must be interior dominant")
    cov = as_covector(chi, n)
    if np.any(np.diff(cov) > 1e-12):
        raise ValueError("chi must be dominant")
    exponent = float((cov - rho_vector(n)) @ x)
    ts = np.linspace(0.0, t_max, cfg.t_points)
    q = np.array([spherical(cov, np.diag(np.exp(t * x)), cfg) * math.exp(-exponent * t) for t in ts])
    rank = n - 1
    sel = ts >= 2.0
    ratios = np.log(q[sel]) / np.log(ts[sel]) if np.any(sel) else np.zeros(0)
    degree = float(np.polyfit(np.log(ts[sel]), np.log(q[sel]), 1)[0]) if np.sum(sel) >= 2 else 0.0
    lower = VerificationReport(
        check="spherical-lower-bound",
        rule="min>=",
        tolerance=1.0 - lower_tol,
        observed_min=float(np.min(q)),
        observed_max=float(np.max(q)),
        series=tuple(zip(ts.tolist(), q.tolist())),
        series_labels=("t", "q"),
    )
    upper = VerificationReport(
        check="spherical-polynomial-growth",
        rule="max<=",
        tolerance=float(rank + 1),
        observed_min=float(np.min(ratios)) if len(ratios) else 0.0,
        observed_max=float(np.max(ratios)) if len(ratios) else 0.0,
        details={"fitted_degree": degree},
    )
    return VerificationReport(
        check="spherical-bounds",
        rule="min>=",
        tolerance=1.0 - lower_tol,
        observed_min=float(np.min(q)),
        observed_max=float(np.max(q)),
        parameters={"chi": cov.tolist(), "ray": x.tolist(), "t_max": t_max, "node_count": cfg.node_count},
        seed=cfg.seed,
        series=tuple(zip(ts.tolist(), q.tolist())),
        series_labels=("t", "q"),
        details={"fitted_degree": degree, "rank": rank},
        parts=(lower, upper),
    )
