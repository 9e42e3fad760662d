"""Fitting the uniform decay exponent theta from a matrix coefficient along a ray.

With f the H-average of the indicator of a chart box B, the coefficient
c(t) = <lambda(a_t) f, f> = int_H nu(a_t B cap B h) dnu_H(h) equals
int_B F(a_t y) dy, where F(x) = nu_H{h : x h^-1 in B}.  The outer integral
is Monte Carlo over B; F is exact for tori and unipotent groups, a sum over
an orbit ball for discrete groups, and a Monte-Carlo KAK integral for
reductive blocks.  The fit log c(t) ~ 2 (theta - 1) rho(t ray) on the upper
half of the t-grid gives theta-hat.

theta bounds the decay of every coefficient from below, so one
coefficient can decay faster: theta-hat estimates theta from below, and
equals it only when the chosen vector is extremal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from temperlab.beta_solver import p_from_theta
from temperlab.delta_estimator import enumerate_ball
from temperlab.harmonic.report import QuadratureConfig
from temperlab.harmonic.spherical import UnsupportedDimensionError, rho_vector
from temperlab.matgroup import (
    SAMPLE_CHUNK,
    BlockReductive,
    CartanVector,
    ChartBox,
    DiagonalTorus,
    DiscreteGenerators,
    UnsupportedSubgroupError,
    UpperUnipotent,
    _resolve,
    _upper_index,
    bruhat_factor,
    cartan_projection_batch,
    modular_character,
    random_orthogonal,
    sample_box_arrays,
    split_chart,
)

# midpoint nodes for the first torus coordinate when n = 3
TORUS_GRID = 24
# sample budget for the costlier F evaluations
DISCRETE_SAMPLES = 20_000
BLOCK_SAMPLES = 200_000


@dataclass(frozen=True)
class ThetaEstimate:
    theta_hat: float | None
    p: float | None
    p_raw: float | None
    slope: float | None
    residual: float | None
    t_grid: tuple
    values: tuple
    std_errors: tuple
    status: str
    flags: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "theta_hat": self.theta_hat,
            "p": self.p,
            "p_raw": self.p_raw,
            "slope": self.slope,
            "residual": self.residual,
            "status": self.status,
            "flags": list(self.flags),
            "series": [{"t": t, "c": c, "se": e} for t, c, e in zip(self.t_grid, self.values, self.std_errors)],
            "diagnostics": self.diagnostics,
        }


def _ray(ray, n: int) -> np.ndarray:
    x = np.asarray(ray.coords if isinstance(ray, CartanVector) else ray, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"ray must have {n} entries")
    if abs(x.sum()) > 1e-9:
        raise ValueError("ray must be traceless")
    if np.any(np.diff(x) > 1e-12) or not np.any(x):
        raise ValueError("ray must be dominant and nonzero")
    return x


def _chart_of(mats: np.ndarray):
    coords, signs, ok = bruhat_factor(mats)
    good = ok & np.all(signs > 0, axis=-1)
    return coords, good


def _log_or(x: float, fallback: float) -> float:
    return math.log(x) if x > 0 else fallback


def _scaled_interval(v: np.ndarray, lo: float, hi: float, k: float):
    """Interval of s with v * exp(k s) in [lo, hi], as (left, right); empty when left > right."""
    with np.errstate(divide="ignore"):
        lv = np.log(np.abs(v))
    # z = k s: log(lo / v) <= z <= log(hi / v) for v > 0, mirrored for v < 0
    pos_lo, pos_hi = _log_or(lo, -np.inf), _log_or(hi, -np.inf)
    neg_lo, neg_hi = _log_or(-hi, -np.inf), _log_or(-lo, -np.inf)
    pos = v > 0
    zlo = np.where(pos, pos_lo, neg_lo) - lv
    zhi = np.where(pos, pos_hi, neg_hi) - lv
    zero = v == 0
    if np.any(zero):
        inside = lo <= 0 <= hi
        zlo = np.where(zero, -np.inf if inside else np.inf, zlo)
        zhi = np.where(zero, np.inf if inside else -np.inf, zhi)
    if k > 0:
        return zlo / k, zhi / k
    return zhi / k, zlo / k


def _torus_measure(box: ChartBox, coords: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Lebesgue measure of {s : x exp(-s) in B} in the torus coordinates s_1..s_{n-1}."""
    n = box.n
    u, h, v = split_chart(coords, n)
    m = n * (n - 1) // 2
    lo = np.array(box.lo)
    hi = np.array(box.hi)
    u_ok = np.all((u >= lo[:m]) & (u <= hi[:m]), axis=-1) & good
    hlo, hhi = lo[m:m + n - 1], hi[m:m + n - 1]
    vlo, vhi = lo[m + n - 1:], hi[m + n - 1:]
    pairs = _upper_index(n)
    if n == 2:
        # h_x - s in [hlo, hhi], v e^{2s} in [vlo, vhi]
        left = h[:, 0] - hhi[0]
        right = h[:, 0] - hlo[0]
        a, b = _scaled_interval(v[:, 0], vlo[0], vhi[0], 2.0)
        width = np.minimum(right, b) - np.maximum(left, a)
        return np.where(u_ok, np.clip(width, 0.0, None), 0.0)
    if n == 3:
        # s = (s1, s2, -s1 - s2); v_ij e^{s_i - s_j} in the V-box; midpoint rule in s1, exact in s2
        step = (hhi[0] - hlo[0]) / TORUS_GRID
        s1 = (h[:, 0] - hhi[0])[:, None] + (np.arange(TORUS_GRID) + 0.5)[None, :] * step
        left = np.broadcast_to((h[:, 1] - hhi[1])[:, None], s1.shape)
        right = np.broadcast_to((h[:, 1] - hlo[1])[:, None], s1.shape)
        for idx, (i, j) in enumerate(pairs):
            e = np.zeros(3)
            e[i] += 1
            e[j] -= 1
            shifted = v[:, idx, None] * np.exp((e[0] - e[2]) * s1)
            a, b = _scaled_interval(shifted, vlo[idx], vhi[idx], e[1] - e[2])
            left = np.maximum(left, a)
            right = np.minimum(right, b)
        out = np.sum(np.clip(right - left, 0.0, None), axis=1) * step
        return np.where(u_ok, out, 0.0)
    raise UnsupportedDimensionError("torus coefficients are computed for n = 2 and n = 3")


def _unipotent_measure(box: ChartBox, coords: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Right N-translation moves only the n-coordinate, bijectively and measure-preservingly."""
    n = box.n
    m = n * (n - 1) // 2
    lo = np.array(box.lo)
    hi = np.array(box.hi)
    head = coords[:, : m + n - 1]
    inside = np.all((head >= lo[: m + n - 1]) & (head <= hi[: m + n - 1]), axis=-1) & good
    v_volume = float(np.prod(hi[m + n - 1:] - lo[m + n - 1:]))
    return np.where(inside, v_volume, 0.0)


def box_cartan_reach(box: ChartBox) -> float:
    """Upper bound on max(kappa_1(b), -kappa_n(b)) over b in the box.

    Uses sigma_1(nbar(u) e^h n(v)) <= |nbar(u)|_F e^{max h} |n(v)|_F and the
    same bound for the inverse.
    """
    n = box.n
    m = n * (n - 1) // 2
    lo = np.abs(np.array(box.lo))
    hi = np.abs(np.array(box.hi))
    big = np.maximum(lo, hi)
    u_f = math.sqrt(n + float(np.sum(big[:m] ** 2)))
    v_f = math.sqrt(n + float(np.sum(big[m + n - 1:] ** 2)))
    hfull_hi = np.append(np.array(box.hi)[m:m + n - 1], -np.sum(np.array(box.lo)[m:m + n - 1]))
    hfull_lo = np.append(np.array(box.lo)[m:m + n - 1], -np.sum(np.array(box.hi)[m:m + n - 1]))
    h_abs = float(max(np.max(np.abs(hfull_hi)), np.max(np.abs(hfull_lo))))
    return math.log(u_f) + h_abs + math.log(v_f)


def _cartan_window(kappa: np.ndarray, center: np.ndarray, reach: float) -> np.ndarray:
    return np.all(np.abs(kappa - center) <= reach + 1e-9, axis=-1)


def _discrete_sum(box: ChartBox, xs: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """sum over gamma of 1_B(x gamma^-1)."""
    out = np.zeros(len(xs))
    if len(candidates) == 0:
        return out
    inv = np.linalg.inv(candidates)
    for j in range(len(inv)):
        out += box.contains_matrices(xs @ inv[j])
    return out


def _block_kak_sample(spec: BlockReductive, rng, count: int, radius: float):
    """Haar-weighted samples of H = prod SL(k) by KAK coordinates.

    Y is uniform on a cube of half-width ``radius`` in the free diagonal
    coordinates of each block; the weight is |prod sinh alpha(Y)| / |W_H|
    times the cube volume.
    """
    n = spec.n
    mats = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    weight = np.ones(count)
    for start, size in spec.blocks:
        free = rng.uniform(-radius, radius, size=(count, size - 1))
        y = np.concatenate([free, -free.sum(axis=1, keepdims=True)], axis=1)
        dens = np.ones(count)
        for a in range(size):
            for b in range(a + 1, size):
                dens *= np.abs(np.sinh(y[:, a] - y[:, b]))
        weight *= dens * (2 * radius) ** (size - 1) / math.factorial(size)
        k1 = random_orthogonal(rng, size, count)
        k2 = random_orthogonal(rng, size, count)
        block = (k1 * np.exp(y)[:, None, :]) @ k2
        sl = slice(start, start + size)
        mats[:, sl, sl] = block
    return mats, weight


def _is_full(spec: BlockReductive) -> bool:
    return len(spec.blocks) == 1 and spec.blocks[0] == (0, spec.n)


def _fit(ts: np.ndarray, values: np.ndarray, rho_ray: float):
    sel = ts >= ts[-1] / 2
    y = np.log(values[sel])
    coef, res, *_ = np.polyfit(ts[sel], y, 1, full=True)
    slope = float(coef[0])
    resid = float(math.sqrt(res[0] / sel.sum())) if len(res) else 0.0
    theta = 1.0 + slope / (2.0 * rho_ray)
    return slope, resid, theta


def estimate_theta_ray(h_spec, ray, t_max: float = 4.0, box: ChartBox | None = None,
                       cfg: QuadratureConfig | None = None, depth: int = 8) -> ThetaEstimate:
    """theta-hat from the decay of c(t) along exp(t ray).

    The reported p uses max(theta-hat, 1/2), since only that maximum is
    determined by the volume exponents; p_raw uses theta-hat itself.
    """
    cfg = QuadratureConfig() if cfg is None else cfg
    h_spec = _resolve(h_spec)
    n = h_spec.n
    if n not in (2, 3):
        raise UnsupportedDimensionError("theta is estimated for n = 2 and n = 3")
    x = _ray(ray, n)
    if not isinstance(h_spec, (DiagonalTorus, UpperUnipotent, BlockReductive, DiscreteGenerators)):
        raise UnsupportedSubgroupError(f"unsupported subgroup {type(h_spec).__name__}")
    if not isinstance(h_spec, DiscreteGenerators) and np.any(modular_character(h_spec) != 0):
        raise UnsupportedSubgroupError("H is not unimodular")
    box = ChartBox.cube(n, 0.5) if box is None else box
    if box.n != n:
        raise ValueError("box and subgroup live in different groups")
    ts = np.linspace(0.0, t_max, cfg.t_points)
    rho_ray = float(rho_vector(n) @ x)
    flags = []
    diagnostics = {"box_lo": list(box.lo), "box_hi": list(box.hi), "ray": x.tolist(), "t_max": t_max}

    if isinstance(h_spec, BlockReductive) and _is_full(h_spec):
        # H = G: F(x) = nu(B^-1 x) = nu(B), so c is constant
        vol = _haar_volume(box, cfg)
        values = np.full(len(ts), vol[0] ** 2)
        ses = np.full(len(ts), 2 * vol[0] * vol[1])
        diagnostics["method"] = "closed-form (H = G)"
        return _finish(ts, values, ses, rho_ray, flags, diagnostics)

    ball = kappa = reach = None
    if isinstance(h_spec, DiscreteGenerators):
        samples = min(cfg.mc_samples, DISCRETE_SAMPLES)
        ball = enumerate_ball(h_spec, depth)
        kappa = cartan_projection_batch(ball.matrices)
        reach = 2.0 * box_cartan_reach(box)
        finite = len(ball.restrict(depth - 1)) == len(ball) if depth > 0 else True
        if not finite:
            flags.append("ball-truncated")
        diagnostics.update(method="orbit-ball sum", depth=depth, ball_size=len(ball), cartan_reach=reach)
    elif isinstance(h_spec, BlockReductive):
        samples = min(cfg.mc_samples, BLOCK_SAMPLES)
        reach = 2.0 * box_cartan_reach(box)
        diagnostics.update(method="paired Monte Carlo over KAK coordinates of H", cartan_reach=reach)
    else:
        samples = cfg.mc_samples
        diagnostics["method"] = "exact inner measure"

    proven_zero = np.array([_provably_zero(h_spec, box, t * x, ball, kappa, reach) for t in ts])
    sums = np.zeros(len(ts))
    sq = np.zeros(len(ts))
    rng = np.random.default_rng([cfg.seed, 29])
    for start in range(0, samples, SAMPLE_CHUNK):
        count = min(SAMPLE_CHUNK, samples - start)
        _, ys, w = sample_box_arrays(box, count, cfg.seed, start)
        w = w * count
        if isinstance(h_spec, BlockReductive):
            radius = float(np.max(np.abs(ts[-1] * x))) + reach
            hs, hw = _block_kak_sample(h_spec, rng, count, radius)
            kh = cartan_projection_batch(hs)
        for i, t in enumerate(ts):
            a = np.exp(t * x)
            xs = a[None, :, None] * ys
            if isinstance(h_spec, DiagonalTorus):
                coords, good = _chart_of(xs)
                f = _torus_measure(box, coords, good)
            elif isinstance(h_spec, UpperUnipotent):
                coords, good = _chart_of(xs)
                f = _unipotent_measure(box, coords, good)
            elif isinstance(h_spec, DiscreteGenerators):
                keep = _cartan_window(kappa, t * x, reach)
                f = _discrete_sum(box, xs, ball.matrices[keep])
            else:
                keep = _cartan_window(kh, t * x, reach)
                f = np.zeros(count)
                if np.any(keep):
                    f[keep] = box.contains_matrices(xs[keep] @ np.linalg.inv(hs[keep])) * hw[keep]
            z = w * f
            sums[i] += float(np.sum(z))
            sq[i] += float(np.sum(z * z))
    mean = sums / samples
    ses = np.sqrt(np.maximum(sq / samples - mean ** 2, 0.0) / samples)
    diagnostics["samples"] = samples
    return _finish(ts, mean, ses, rho_ray, flags, diagnostics, proven_zero)


def _haar_volume(box: ChartBox, cfg: QuadratureConfig):
    total = 0.0
    total_sq = 0.0
    for start in range(0, cfg.mc_samples, SAMPLE_CHUNK):
        count = min(SAMPLE_CHUNK, cfg.mc_samples - start)
        _, _, w = sample_box_arrays(box, count, cfg.seed, start)
        z = w * count
        total += float(np.sum(z))
        total_sq += float(np.sum(z * z))
    mean = total / cfg.mc_samples
    return mean, math.sqrt(max(total_sq / cfg.mc_samples - mean ** 2, 0.0) / cfg.mc_samples)


def _provably_zero(h_spec, box: ChartBox, shift: np.ndarray, ball, kappa, reach) -> bool:
    """True when c vanishes at this t for a structural reason, not for lack of samples."""
    n = box.n
    m = n * (n - 1) // 2
    if isinstance(h_spec, UpperUnipotent):
        # the diagonal chart coordinate of a_t y is shifted by t ray and must return to the box
        lo = np.array(box.lo[m:m + n - 1])
        hi = np.array(box.hi[m:m + n - 1])
        return bool(np.any(lo + shift[: n - 1] > hi) or np.any(hi + shift[: n - 1] < lo))
    if isinstance(h_spec, DiscreteGenerators) and ball is not None:
        if len(ball) == 1:
            return _provably_zero(UpperUnipotent(n), box, shift, None, None, None)
        complete = len(ball.restrict(ball.depth - 1)) == len(ball)
        return complete and not np.any(_cartan_window(kappa, shift, reach))
    return False


def _finish(ts, values, ses, rho_ray, flags, diagnostics, proven_zero=None) -> ThetaEstimate:
    upper = ts >= ts[-1] / 2
    # sanity: a coefficient of a positive function, so c(t) should not rise beyond its noise
    rises = np.diff(values[upper]) > 3 * (ses[upper][1:] + ses[upper][:-1])
    if np.any(rises):
        flags.append("nonmonotone")
    common = dict(t_grid=tuple(ts.tolist()), values=tuple(values.tolist()), std_errors=tuple(ses.tolist()))
    if values[0] <= 0:
        raise ValueError("c(0) vanishes: the box misses the subgroup orbit entirely")
    if np.any(values[upper] <= 0):
        zero = values[upper] <= 0
        if proven_zero is not None and np.all(proven_zero[upper][zero]):
            # c(t) vanishes identically for large t: faster than any exponential
            flags.append("compact-support")
            return ThetaEstimate(0.0, 2.0, 1.0, -math.inf, 0.0, status="ok", flags=tuple(flags),
                                 diagnostics=diagnostics, **common)
        flags.append("no-hits")
        return ThetaEstimate(None, None, None, None, None, status="indeterminate", flags=tuple(flags),
                             diagnostics=diagnostics, **common)
    status = "lower-bound" if "ball-truncated" in flags else "ok"
    slope, resid, theta = _fit(ts, values, rho_ray)
    raw = theta
    theta = min(max(theta, 0.0), 1.0)
    if theta != raw:
        flags.append("clamped")
    diagnostics["theta_unclamped"] = raw
    return ThetaEstimate(
        theta_hat=theta,
        p=float(p_from_theta(max(theta, 0.5))),
        p_raw=float(p_from_theta(theta)),
        slope=slope,
        residual=resid,
        status=status,
        flags=tuple(flags),
        diagnostics=diagnostics,
        **common,
    )
