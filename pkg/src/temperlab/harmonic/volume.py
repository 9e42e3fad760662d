"""Volume decay under conjugation and volume growth of double cosets BgB."""

from __future__ import annotations

import math

import numpy as np

from temperlab.harmonic.haar import kak_to_bruhat_constant
from temperlab.harmonic.report import QuadratureConfig, VerificationReport
from temperlab.harmonic.spherical import UnsupportedDimensionError, rho_vector
from temperlab.matgroup import (
    SAMPLE_CHUNK,
    CartanVector,
    ChartBox,
    bruhat_compose,
    bruhat_factor,
    cartan_projection_batch,
    haar_density,
    sample_chart_range,
)


def _ray_array(ray) -> np.ndarray:
    return np.asarray(ray.coords if isinstance(ray, CartanVector) else ray, dtype=float)


def conjugation_members(box: ChartBox, mats: np.ndarray, a_diag: np.ndarray) -> np.ndarray:
    """x in a B a^-1 (given x in B) iff a^-1 x a lies in B."""
    inv = 1.0 / a_diag
    y = inv[None, :, None] * mats * a_diag[None, None, :]
    return box.contains_matrices(y)


def volume_decay_conjugation(box: ChartBox, ray, t_max: float = 6.0,
                             cfg: QuadratureConfig | None = None,
                             plateau_t: float = 1.0, factor: float = 3.0) -> VerificationReport:
    """Monte-Carlo nu(a_t B a_t^-1 cap B) exp(2 t rho(ray)) on a t-grid.

    All grid points reuse one Haar-weighted sample of B.  Passes when the
    normalized values stay below ``factor`` times the small-t plateau,
    with three standard errors of slack.
    """
    cfg = QuadratureConfig() if cfg is None else cfg
    x = _ray_array(ray)
    n = box.n
    if len(x) != n:
        raise ValueError("ray and box live in different groups")
    if np.any(np.diff(x) >= 0):
        raise ValueError("ray must be interior dominant")
    ts = np.linspace(0.0, t_max, cfg.t_points)
    total = cfg.mc_samples
    sums = np.zeros(len(ts))
    sq = np.zeros(len(ts))
    for start in range(0, total, SAMPLE_CHUNK):
        stop = min(start + SAMPLE_CHUNK, total)
        coords = sample_chart_range(box, start, stop, cfg.seed)
        mats = bruhat_compose(coords, n)
        back, signs, ok = bruhat_factor(mats)
        if not (np.all(ok) and np.all(signs > 0) and np.allclose(back, coords, atol=1e-8)):
            raise ValueError("box is not inside the open Bruhat cell")
        z = box.volume * haar_density(coords, n)
        for i, t in enumerate(ts):
            hit = conjugation_members(box, mats, np.exp(t * x))
            zi = np.where(hit, z, 0.0)
            sums[i] += float(np.sum(zi))
            sq[i] += float(np.sum(zi * zi))
    mean = sums / total
    se = np.sqrt(np.maximum(sq / total - mean ** 2, 0.0) / total)
    scale = np.exp(2.0 * ts * float(rho_vector(n) @ x))
    norm = mean * scale
    norm_se = se * scale
    small = ts <= plateau_t
    plateau = float(np.mean(norm[small]))
    worst = int(np.argmax(norm))
    return VerificationReport(
        check="volume-decay-conjugation",
        rule="max<=",
        tolerance=factor * plateau,
        observed_min=float(np.min(norm)),
        observed_max=float(norm[worst]),
        slack=3.0 * float(norm_se[worst]),
        parameters={"ray": x.tolist(), "t_max": t_max, "box_lo": list(box.lo), "box_hi": list(box.hi),
                    "plateau_t": plateau_t, "factor": factor},
        seed=cfg.seed,
        samples=total,
        series=tuple(zip(ts.tolist(), norm.tolist(), norm_se.tolist())),
        series_labels=("t", "normalized", "std_error"),
        details={"plateau": plateau, "box_volume_haar_t0": float(norm[0])},
    )


def _outer_shell_sl2(x_center: float, radius: float) -> float:
    """int sinh(2x) dx over |x - x_center| <= radius, x >= 0."""
    a = max(0.0, x_center - radius)
    b = x_center + radius
    if b <= 0:
        return 0.0
    return 0.5 * (math.cosh(2 * b) - math.cosh(2 * a))


def inner_box_sl2(r: float):
    """Half-widths (u, a, v) with each factor of Cartan norm <= r / 3.

    For the unipotent factors |kappa(nbar(u))| = sqrt(2) asinh(|u| / 2);
    for the diagonal factor |kappa(a_s)| = sqrt(2) |s|.
    """
    if not r > 0:
        raise ValueError("radius must be positive for a nonempty inner box")
    third = r / 3.0
    hu = 2.0 * math.sinh(third / math.sqrt(2.0))
    ha = third / math.sqrt(2.0)
    return hu, ha, hu


def _verify_inner_box(hu: float, ha: float, hv: float, r: float, seed: int, count: int = 4096) -> float:
    rng = np.random.default_rng([seed, 3])
    pts = rng.uniform(-1, 1, size=(count, 3)) * np.array([hu, ha, hv])
    corners = np.array([[su * hu, sa * ha, sv * hv] for su in (-1, 1) for sa in (-1, 1) for sv in (-1, 1)])
    pts = np.concatenate([pts, corners])
    kappa = cartan_projection_batch(bruhat_compose(pts, 2))
    return float(np.max(np.linalg.norm(kappa, axis=1)))


def volume_growth_bgb(ray, t_max: float = 8.0, r: float = 1.0, cfg: QuadratureConfig | None = None,
                      spread_tol: float = 50.0) -> VerificationReport:
    """Inner and outer bounds for nu(B e^{t ray} B) with B = K exp(a(r)) K, SL(2).

    Outer: kappa(BgB) lies within 2r of kappa(g), so the KAK integral over
    that shell bounds the volume.  Inner: B contains the chart box
    nbar(U) a(S) n(V), so B g B contains the elements
    nbar(u1 + e^{-alpha(t + s)} u2) a(t + s) n(v); their chart volume
    is a lower bound.  Both are in Bruhat-chart normalization and are
    divided by exp(2 rho(t ray)).
    """
    cfg = QuadratureConfig() if cfg is None else cfg
    x = _ray_array(ray)
    if len(x) != 2:
        raise UnsupportedDimensionError("double coset volumes are computed for n = 2")
    if x[0] < x[1]:
        raise ValueError("ray must be dominant")
    hu, ha, hv = inner_box_sl2(r)
    reach = _verify_inner_box(hu, ha, hv, r, cfg.seed)
    if reach > r * (1 + 1e-9):
        raise ValueError(f"inner box leaves B: Cartan norm {reach} > {r}")
    const = kak_to_bruhat_constant()
    ts = np.linspace(0.0, t_max, cfg.t_points)
    alpha = float(x[0] - x[1])
    a_mass = (math.exp(2 * ha) - math.exp(-2 * ha)) / 2.0
    rows = []
    for t in ts:
        xc = t * x[0]
        growth = math.exp(2.0 * t * float(rho_vector(2) @ x))
        # the a-coordinate of diag(e^x, e^-x) has norm sqrt(2)|x|, so a 2r ball is |x - xc| <= sqrt(2) r
        outer = const * (2 * math.pi) ** 2 * _outer_shell_sl2(xc, math.sqrt(2.0) * r)
        inner = (2 * hu) * (1 + math.exp(-alpha * t - 2 * ha)) * a_mass * (2 * hv) * math.exp(alpha * t)
        rows.append((float(t), outer / growth, inner / growth))
    outer_n = np.array([r_[1] for r_ in rows])
    inner_n = np.array([r_[2] for r_ in rows])
    outer_rep = VerificationReport(
        check="bgb-outer", rule="spread<=", tolerance=spread_tol,
        observed_min=float(np.min(outer_n)), observed_max=float(np.max(outer_n)),
    )
    inner_rep = VerificationReport(
        check="bgb-inner", rule="spread<=", tolerance=spread_tol,
        observed_min=float(np.min(inner_n)), observed_max=float(np.max(inner_n)),
    )
    ratio = inner_n / outer_n
    order_rep = VerificationReport(
        check="bgb-inner-below-outer", rule="max<=", tolerance=1.0,
        observed_min=float(np.min(ratio)), observed_max=float(np.max(ratio)),
    )
    # headline: the two-sided bound c e^{2 rho} <= nu <= C e^{2 rho}, seen through inner / outer
    return VerificationReport(
        check="volume-growth-bgb",
        rule="spread<=",
        tolerance=spread_tol,
        observed_min=float(np.min(ratio)),
        observed_max=float(np.max(ratio)),
        parameters={"ray": x.tolist(), "t_max": t_max, "r": r},
        seed=cfg.seed,
        series=tuple(rows),
        series_labels=("t", "outer_normalized", "inner_normalized"),
        details={"inner_half_widths": [hu, ha, hv], "inner_reach": reach, "kak_to_bruhat": const},
        parts=(outer_rep, inner_rep, order_rep),
    )
