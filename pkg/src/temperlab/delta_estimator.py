"""Volume growth exponent delta for discrete and reductive subgroups.

For a discrete group the exponent is the abscissa of convergence of the
series sum exp(-t s(gamma)) with s = 2 rho kappa, read off from the
growth of N(R) = #{gamma : s(gamma) <= R} on an enumerated word ball.
For a reductive subgroup it is the abscissa of a Cartan-coordinate
integral, estimated ray by ray with Gauss-Legendre quadrature.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from temperlab.beta_solver import PairSpec, Verdict, verdict_from_exponent
from temperlab.config import get_settings
from temperlab.matgroup import (
    CartanVector,
    DiscreteGenerators,
    GroupElement,
    cartan_projection_batch,
    dump_generators,
)
from temperlab.rootdata import rho_form

SHELL_WIDTH = 0.5
FIT_DROP_LOW = 0.3
FIT_DROP_HIGH = 0.1
BRACKET_MARGIN = 0.25


class TruncationError(RuntimeError):
    """Element cap reached; ``partial`` holds the ball built so far."""

    def __init__(self, message: str, partial: "OrbitBall"):
        super().__init__(message)
        self.partial = partial


class DedupCollisionError(RuntimeError):
    pass


def generator_fingerprint(gens: DiscreteGenerators) -> str:
    blob = json.dumps(dump_generators(gens), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class OrbitBall:
    """Distinct group elements of word length <= depth, in breadth-first order."""

    matrices: np.ndarray
    word_lengths: np.ndarray
    s_values: np.ndarray
    depth: int
    fingerprint: str
    exact: bool = True
    truncated: bool = False
    exact_entries: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.word_lengths)

    @property
    def n(self) -> int:
        return self.matrices.shape[-1]

    @property
    def elements(self) -> list:
        """(GroupElement, word length, s-value) triples; built on demand."""
        out = []
        for i in range(len(self)):
            if self.exact_entries is not None:
                num, den = self.exact_entries[i]
                n = self.n
                rows = [[Fraction(num[r * n + c], den) for c in range(n)] for r in range(n)]
                g = GroupElement(rows, exact=True)
            else:
                g = GroupElement(self.matrices[i], exact=False, tol=1e-6)
            out.append((g, int(self.word_lengths[i]), float(self.s_values[i])))
        return out

    def restrict(self, depth: int) -> "OrbitBall":
        """Sub-ball of words of length <= depth (a prefix, by breadth-first order)."""
        k = int(np.searchsorted(self.word_lengths, depth, side="right"))
        entries = self.exact_entries[:k] if self.exact_entries is not None else None
        return OrbitBall(
            self.matrices[:k], self.word_lengths[:k], self.s_values[:k], min(depth, self.depth),
            self.fingerprint, self.exact, self.truncated, entries,
        )


def s_values_of(matrices: np.ndarray) -> np.ndarray:
    """s = 2 rho(kappa) for a stack of matrices, clipped at 0."""
    n = matrices.shape[-1]
    rho = np.array([float(c) for c in rho_form(n)])
    s = 2.0 * cartan_projection_batch(matrices) @ rho
    return np.maximum(s, 0.0)


def _exact_generator_data(gens: Sequence[GroupElement]):
    out = []
    for g in gens:
        den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for r in g.rows for x in r), 1)
        num = np.array([[int(x * den) for x in r] for r in g.rows], dtype=object)
        out.append((num, den))
    return out


_INT64_SAFE = 1 << 62
_py_int = np.frompyfunc(int, 1, 1)


def _int64_safe(num: np.ndarray, den: np.ndarray, gdata) -> bool:
    big = max(max((abs(int(x)) for x in num.flat), default=0), max((int(x) for x in den), default=0))
    gbig = max(max(abs(int(x)) for x in g.flat) for g, _ in gdata)
    gden = max(d for _, d in gdata)
    return big * max(gbig, gden) * num.shape[-1] < _INT64_SAFE


def _reduce_rows(num: np.ndarray, den: np.ndarray):
    flat = num.reshape(len(num), -1)
    g = np.gcd.reduce(np.concatenate([flat, den[:, None]], axis=1), axis=1)
    g = np.where(g == 0, 1, g)
    return num // g[:, None, None], den // g


def _enumerate_exact(gens: DiscreteGenerators, depth: int, cap: int):
    elems = gens.with_inverses()
    gdata = _exact_generator_data(elems)
    n = gens.n
    ident = np.array([[int(i == j) for j in range(n)] for i in range(n)], dtype=object)
    seen = {tuple([int(i == j) for i in range(n) for j in range(n)] + [1]): 0}
    keys = [next(iter(seen))]
    lengths = [0]
    frontier = ident[None]
    fden = np.array([1], dtype=object)
    truncated = False
    for level in range(1, depth + 1):
        if len(frontier) == 0:
            break
        new_num, new_den = [], []
        wide = not _int64_safe(frontier, fden, gdata)
        # object arrays must hold Python ints, not numpy scalars, to avoid wraparound
        work = _py_int(frontier).astype(object) if wide else frontier.astype(np.int64)
        wden = _py_int(fden).astype(object) if wide else fden.astype(np.int64)
        for gnum, gden in gdata:
            gm = gnum.astype(object if wide else np.int64)
            prod = np.matmul(work, gm)
            pden = wden * gden
            prod, pden = _reduce_rows(prod, pden)
            rows = np.concatenate([prod.reshape(len(prod), -1), pden[:, None]], axis=1).tolist()
            for idx, row in enumerate(rows):
                key = tuple(int(x) for x in row) if wide else tuple(row)
                if key in seen:
                    continue
                seen[key] = len(keys)
                keys.append(key)
                lengths.append(level)
                new_num.append(prod[idx])
                new_den.append(pden[idx])
                if len(keys) > cap:
                    truncated = True
                    break
            if truncated:
                break
        if truncated:
            break
        frontier = np.array(new_num, dtype=object).reshape(-1, n, n) if new_num else np.zeros((0, n, n), dtype=object)
        fden = np.array(new_den, dtype=object)
    entries = tuple((k[:-1], k[-1]) for k in keys)
    mats = np.array([[float(Fraction(x, k[-1])) for x in k[:-1]] for k in keys]).reshape(-1, n, n)
    return mats, np.array(lengths, dtype=np.int64), entries, truncated


def _enumerate_float(gens: DiscreteGenerators, depth: int, cap: int, grid: float, audit: float):
    elems = [g.matrix for g in gens.with_inverses()]
    n = gens.n
    ident = np.eye(n)

    def key_of(m):
        return (np.round(m / grid) + 0.0).tobytes()

    seen = {key_of(ident): 0}
    mats = [ident]
    lengths = [0]
    frontier = ident[None]
    truncated = False
    collisions = 0
    for level in range(1, depth + 1):
        if len(frontier) == 0:
            break
        new = []
        for g in elems:
            prod = frontier @ g
            for m in prod:
                k = key_of(m)
                hit = seen.get(k)
                if hit is not None:
                    if np.max(np.abs(mats[hit] - m)) > audit * max(1.0, float(np.max(np.abs(m)))):
                        collisions += 1
                    continue
                seen[k] = len(mats)
                mats.append(m)
                lengths.append(level)
                new.append(m)
                if len(mats) > cap:
                    truncated = True
                    break
            if truncated:
                break
        if truncated:
            break
        frontier = np.array(new).reshape(-1, n, n)
    if collisions:
        raise DedupCollisionError(f"{collisions} rounded-key collisions failed the {audit} audit")
    return np.array(mats), np.array(lengths, dtype=np.int64), truncated


def enumerate_ball(gens: DiscreteGenerators, depth: int, cap: int | None = None) -> OrbitBall:
    """Breadth-first closure of words of length <= depth in gens and their inverses.

    Exact generators are deduplicated on reduced integer numerators;
    floating ones on entries rounded to a 1e-9 grid, with equal keys
    re-checked to 1e-7.  Exceeding ``cap`` raises TruncationError.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    settings = get_settings()
    cap = settings.element_cap if cap is None else cap
    if gens.exact:
        mats, lengths, entries, truncated = _enumerate_exact(gens, depth, cap)
    else:
        mats, lengths, truncated = _enumerate_float(gens, depth, cap, settings.dedup_grid, settings.dedup_audit)
        entries = None
    s = s_values_of(mats)
    s[0] = 0.0
    ball = OrbitBall(mats, lengths, s, depth, generator_fingerprint(gens), gens.exact, truncated, entries)
    if truncated:
        raise TruncationError(f"element cap {cap} reached before depth {depth}", ball)
    return ball


def poincare_partial(ball: OrbitBall, t: float) -> float:
    """Partial series sum over the ball of exp(-t s(gamma))."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(np.sum(np.exp(-t * np.sort(ball.s_values)[::-1])))


# ---------------------------------------------------------------------------
# Abscissa estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbscissaEstimate:
    value: float
    lower: float
    upper: float
    depth_schedule: tuple = ()
    shells: tuple = ()
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.status == "ok":
            if not (0 <= self.value):
                raise ValueError("abscissa estimates are nonnegative")
            if not (self.lower <= self.value <= self.upper):
                raise ValueError("estimate must lie inside its bracket")

    @property
    def error_bar(self) -> float:
        return max(self.value - self.lower, self.upper - self.value)

    @property
    def verdict(self) -> Verdict:
        """Tempered iff the whole bracket lies at or below 1/2."""
        if self.status == "indeterminate":
            return Verdict.INDETERMINATE
        if self.upper < 0.5:
            return Verdict.TEMPERED
        if self.lower > 0.5:
            return Verdict.NOT_TEMPERED
        return Verdict.INDETERMINATE

    def to_json(self, seed: int | None = None) -> dict:
        return {
            "delta": self.value,
            "bracket": [self.lower, self.upper],
            "shells": [{"R": r, "N": n} for r, n in self.shells],
            "depth": max(self.depth_schedule) if self.depth_schedule else None,
            "depth_schedule": list(self.depth_schedule),
            "seed": seed,
            "status": self.status,
            "verdict": self.verdict.value,
            "diagnostics": self.diagnostics,
        }


def cumulative_counts(s_values: np.ndarray, radii: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(s_values), radii, side="right")


def _fit_slope(x: np.ndarray, y: np.ndarray):
    """Least-squares slope with its standard error."""
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    dof = max(len(x) - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else math.inf
    return float(coef[0]), se


def _fit_window(radii: np.ndarray) -> np.ndarray:
    k = len(radii)
    lo = int(math.floor(FIT_DROP_LOW * k))
    hi = k - int(math.floor(FIT_DROP_HIGH * k))
    return radii[lo:hi]


def _bracket(s: np.ndarray, r_lo: float, r_hi: float, margin: float, t_grid: np.ndarray):
    """Divergence / flatness test on the tail mass of the series over a window.

    For each t compare sum exp(-t s) over the outer half of the window
    with the inner half.  A ratio above exp(margin) signals divergence
    at t, below exp(-margin) convergence.
    """
    mid = 0.5 * (r_lo + r_hi)
    inner = s[(s > r_lo) & (s <= mid)]
    outer = s[(s > mid) & (s <= r_hi)]
    if len(inner) == 0 or len(outer) == 0:
        return 0.0, math.inf
    lower, upper = 0.0, math.inf
    for t in t_grid:
        ratio = math.log(np.sum(np.exp(-t * (outer - mid)))) - math.log(np.sum(np.exp(-t * (inner - mid))))
        if ratio > margin:
            lower = max(lower, float(t))
        elif ratio < -margin and upper == math.inf:
            upper = float(t)
    return lower, max(upper, lower)


def delta_from_ball(ball: OrbitBall, reference: OrbitBall | None = None, schedule: tuple = (),
                    margin: float = BRACKET_MARGIN) -> AbscissaEstimate:
    """Fit delta on a ball; shells are reliable where ``reference`` has the same counts."""
    s = ball.s_values
    radii_all = SHELL_WIDTH * np.arange(1, int(math.floor(float(np.max(s)) / SHELL_WIDTH)) + 2)
    counts = cumulative_counts(s, radii_all)
    shells = tuple((float(r), int(c)) for r, c in zip(radii_all, counts))
    if reference is not None and len(reference) == len(ball):
        # finite group: the ball stopped growing
        return AbscissaEstimate(0.0, 0.0, 0.0, schedule, shells, "ok", {"finite": True, "order": len(ball)})
    if reference is None:
        reliable = radii_all
    else:
        ref_counts = cumulative_counts(reference.s_values, radii_all)
        agree = ref_counts == counts
        # largest initial run of agreeing shells
        stop = int(np.argmin(agree)) if not np.all(agree) else len(agree)
        reliable = radii_all[:stop]
    window = _fit_window(reliable)
    diag = {
        "shell_width": SHELL_WIDTH,
        "fit_drop_low": FIT_DROP_LOW,
        "fit_drop_high": FIT_DROP_HIGH,
        "reliable_radius": float(reliable[-1]) if len(reliable) else 0.0,
        "elements": len(ball),
    }
    if len(window) < 3:
        diag["reason"] = "too few reliable shells for a fit"
        return AbscissaEstimate(float("nan"), 0.0, math.inf, schedule, shells, "indeterminate", diag)
    logn = np.log(cumulative_counts(s, window).astype(float))
    slope, se = _fit_slope(window, logn)
    value = max(slope, 0.0)
    # the tail test uses every reliable shell except the identity
    lower, upper = _bracket(s, 0.0, float(reliable[-1]), margin, np.linspace(0.0, 2.0, 201))
    lower = max(0.0, min(lower, slope - 2 * se))
    upper = max(upper, slope + 2 * se)
    diag.update({
        "fit_window": [float(window[0]), float(window[-1])],
        "slope": slope,
        "slope_stderr": se,
        "bracket_margin": margin,
    })
    if not (lower <= value <= upper):
        diag["bracket_widened"] = True
        lower, upper = min(lower, value), max(upper, value)
    return AbscissaEstimate(value, lower, upper, schedule, shells, "ok", diag)


def delta_discrete(gens: DiscreteGenerators, depth_schedule: Sequence[int],
                   margin: float = BRACKET_MARGIN) -> AbscissaEstimate:
    """delta = limsup log N(R) / R from a linear fit over reliable radius shells.

    The ball is enumerated once at the largest depth; a shell counts as
    reliable when the last two depths of the schedule agree on it.
    """
    schedule = tuple(int(d) for d in depth_schedule)
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("depth schedule must be a nonempty increasing list")
    ball = enumerate_ball(gens, schedule[-1])
    reference = ball.restrict(schedule[-2]) if len(schedule) > 1 else None
    return delta_from_ball(ball, reference, schedule, margin)


def growth_indicator(gens: DiscreteGenerators, direction, aperture: float, depth: int) -> float:
    """Exponential growth rate of orbit points in a cone, scaled by the direction's norm.

    Counts kappa(gamma) within ``aperture`` radians of ``direction`` and
    fits log N_C(R) against R = ||kappa||.  Returns -inf when the cone
    holds no nonzero Cartan projections.
    """
    if not (0 < aperture < math.pi / 2):
        raise ValueError("aperture must lie in (0, pi/2)")
    d = np.asarray(direction.coords if isinstance(direction, CartanVector) else direction, dtype=float)
    dnorm = float(np.linalg.norm(d))
    if dnorm == 0:
        raise ValueError("direction must be nonzero")
    if np.any(np.diff(d) > 1e-12):
        raise ValueError("direction must be dominant")
    ball = enumerate_ball(gens, depth)
    step = max(2, depth // 5)
    ref_size = len(ball.restrict(depth - step)) if depth > step else 0
    kappa = cartan_projection_batch(ball.matrices)
    norms = np.linalg.norm(kappa, axis=1)
    cos = np.divide(kappa @ d, norms * dnorm, out=np.zeros_like(norms), where=norms > 1e-12)
    in_cone = (norms > 1e-12) & (cos >= math.cos(aperture))
    if not np.any(in_cone):
        return -math.inf
    r_all = norms[in_cone]
    r_ref = norms[:ref_size][in_cone[:ref_size]]
    radii = SHELL_WIDTH * np.arange(1, int(math.floor(float(np.max(r_all)) / SHELL_WIDTH)) + 2)
    counts = cumulative_counts(r_all, radii)
    agree = cumulative_counts(r_ref, radii) == counts
    stop = int(np.argmin(agree)) if not np.all(agree) else len(agree)
    window = _fit_window(radii[:stop])
    window = window[cumulative_counts(r_all, window) > 0]
    if len(window) < 3:
        # too little data in the cone to see exponential growth
        return 0.0
    slope, _ = _fit_slope(window, np.log(cumulative_counts(r_all, window).astype(float)))
    return dnorm * max(slope, 0.0)


# ---------------------------------------------------------------------------
# Reductive subgroups: radial quadrature
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panel_nodes(length: float, panel: float = 1.0):
    """Composite Gauss-Legendre nodes and weights on [0, length]."""
    k = max(1, int(math.ceil(length / panel)))
    edges = np.linspace(0.0, length, k + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _log_sinh_abs(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        return ax - math.log(2.0) + np.log1p(-np.exp(-2.0 * ax))


def sphere_directions(d: int, count: int, seed: int) -> np.ndarray:
    """Deterministic spread of unit vectors in R^d."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        ang = 2 * math.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = math.pi * (3 - math.sqrt(5)) * i
        r = np.sqrt(1 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    z = np.random.default_rng(seed).standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class _RayModel:
    """Log-integrand pieces along rays for one pair."""

    h_cov: np.ndarray
    h_mult: np.ndarray
    emb: np.ndarray
    rho2: np.ndarray

    def exponents(self, u: np.ndarray):
        """Per direction: root values alpha(u) and 2 rho(dominant(emb u))."""
        roots = u @ self.h_cov.T if len(self.h_mult) else np.zeros((len(u), 0))
        x = np.sort(u @ self.emb.T, axis=1)[:, ::-1]
        return roots, x @ self.rho2

    def log_integral(self, u: np.ndarray, t: np.ndarray, nodes: np.ndarray, logw: np.ndarray):
        """log of int_0^T exp(-2t rho(dom(r emb u))) prod |sinh alpha(r u)|^(m/2) dr.

        Shape (len(u), len(t)); Weyl symmetry lets us integrate over all
        roots with half multiplicity instead of a positive system.
        """
        roots, g = self.exponents(u)
        growth = np.zeros((len(u), len(nodes)))
        for k in range(roots.shape[1]):
            growth += 0.5 * self.h_mult[k] * _log_sinh_abs(roots[:, k][:, None] * nodes[None, :])
        # (u, t, r)
        log_f = growth[:, None, :] - t[None, :, None] * g[:, None, None] * nodes[None, None, :] + logw
        top = np.max(log_f, axis=2, keepdims=True)
        return (top + np.log(np.sum(np.exp(log_f - top), axis=2, keepdims=True)))[..., 0]


def _growth_rates(model: _RayModel, u: np.ndarray, t_grid: np.ndarray, truncation: float):
    nodes, w = _panel_nodes(truncation)
    half = nodes <= truncation / 2
    logw = np.log(w)
    # Separate sums over [0, T/2] and [0, T] from one node set (panels align for even counts).
    full = model.log_integral(u, t_grid, nodes, logw)
    part = model.log_integral(u, t_grid, nodes[half], logw[half])
    return (full - part) / (truncation / 2)


def _threshold(rates: np.ndarray, t_grid: np.ndarray, cut: float) -> float:
    """Where the growth rate, linear in t on the divergent side, reaches 0."""
    div = rates > cut
    if not np.any(div):
        return 0.0
    idx = np.nonzero(div)[0]
    if len(idx) < 2:
        return float(t_grid[idx[-1]])
    slope, intercept = np.polyfit(t_grid[idx], rates[idx], 1)
    if slope >= 0:
        return float(t_grid[idx[-1]])
    root = -intercept / slope
    return float(min(max(root, t_grid[idx[-1]]), t_grid[min(idx[-1] + 1, len(t_grid) - 1)]))


DEFAULT_T_GRID = tuple(np.linspace(0.0, 1.25, 32))


def delta_reductive_quadrature(
    pair: PairSpec,
    embedding,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    truncation: float = 120.0,
    directions: int = 256,
    refine: int = 4,
    seed: int = 0,
) -> AbscissaEstimate:
    """Abscissa of a Cartan-coordinate integral over the split torus of H.

    ``embedding`` maps H's torus coordinates to the diagonal of sl(n) (an
    n x d matrix); the h-weights of ``pair`` supply the roots of H with
    multiplicities.  Each sampled direction gives a ray threshold; the
    best directions are polished by a Nelder-Mead search on the sphere.
    """
    t = np.asarray(t_grid, dtype=float)
    if len(t) < 3 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing with at least 3 points")
    if truncation <= 0:
        raise ValueError("truncation must be positive")
    emb = np.array([[float(x) for x in row] for row in embedding])
    n, d = emb.shape
    if d != pair.dim:
        raise ValueError(f"embedding has {d} columns, pair has dimension {d}")
    rho2 = 2.0 * np.array([float(c) for c in rho_form(n)])
    model = _RayModel(pair.h_system.covector_matrix(), pair.h_system.multiplicities(), emb, rho2)
    cut = 4.0 * math.log(2.0) / truncation
    spacing = float(np.min(np.diff(t)))
    u = sphere_directions(d, directions, seed)
    _, g = model.exponents(u)
    diag = {"truncation": truncation, "directions": int(len(u)), "divergence_cut": cut, "seed": seed}
    if cut >= spacing * float(np.min(g)):
        diag["reason"] = "truncation too small to separate grid points"
        return AbscissaEstimate(float("nan"), 0.0, math.inf, (), (), "indeterminate", diag)
    rates = _growth_rates(model, u, t, truncation)
    thresholds = np.array([_threshold(r, t, cut) for r in rates])
    best = float(np.max(thresholds))
    best_u = u[int(np.argmax(thresholds))]
    if d > 1 and refine > 0:
        order = np.argsort(-thresholds)[:refine]

        def objective(v):
            nv = float(np.linalg.norm(v))
            if nv == 0:
                return 0.0
            vv = (v / nv)[None, :]
            return -_threshold(_growth_rates(model, vv, t, truncation)[0], t, cut)

        for k in order:
            res = minimize(objective, u[k], method="Nelder-Mead",
                           options={"xatol": 1e-4, "fatol": 1e-5, "maxiter": 200 * d})
            if -res.fun > best:
                best = float(-res.fun)
                best_u = res.x / np.linalg.norm(res.x)
        diag["refined_from"] = int(len(order))
    divergent = rates > cut
    lower = float(np.max(np.where(divergent, t[None, :], 0.0)))
    conv_cols = np.nonzero(~np.any(divergent, axis=0))[0]
    upper = float(t[conv_cols[0]]) if len(conv_cols) else math.inf
    diag["best_direction"] = [float(x) for x in best_u]
    if not (lower <= best <= upper):
        diag["bracket_widened"] = True
        lower, upper = min(lower, best), max(upper, best)
    return AbscissaEstimate(best, lower, upper, (), (), "ok", diag)


def delta_verdict(est: AbscissaEstimate) -> Verdict:
    if est.status == "indeterminate":
        return Verdict.INDETERMINATE
    return verdict_from_exponent(est.value, "delta", error_bar=est.error_bar)
