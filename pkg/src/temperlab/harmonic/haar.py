"""Haar integrals on SL(2) in Iwasawa, Cartan (KAK) and Bruhat coordinates.

Each integral is a tensor quadrature over a box that provably contains
the support of the test function, so no mass is lost to truncation.
The three coordinate measures agree up to constants; haar_crosscheck
fixes those constants on one function and compares the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from temperlab.harmonic.report import QuadratureConfig, VerificationReport
from temperlab.matgroup import rotation2

_CHUNK = 1 << 18


@dataclass(frozen=True)
class MatrixBump:
    """Smooth bump exp(1 - 1/(1 - d^2/r^2)) in Frobenius distance d from a centre."""

    center: tuple
    radius: float
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (2, 2):
            raise ValueError("bump centres are 2 x 2 matrices")
        if abs(np.linalg.det(c) - 1.0) > 1e-9:
            raise ValueError("bump centre must lie in SL(2)")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(map(tuple, c.tolist())))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.center)

    def __call__(self, mats: np.ndarray) -> np.ndarray:
        d2 = np.sum((mats - self.matrix) ** 2, axis=(-2, -1)) / self.radius ** 2
        out = np.zeros(d2.shape)
        inside = d2 < 1.0
        out[inside] = self.scale * np.exp(1.0 - 1.0 / (1.0 - d2[inside]))
        return out

    def scaled(self, factor: float) -> "MatrixBump":
        return MatrixBump(self.center, self.radius, self.scale * factor)


def _gl(a: float, b: float, k: int):
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _periodic(k: int):
    th = 2 * math.pi * np.arange(k) / k
    return th, np.full(k, 2 * math.pi / k)


def _tensor_sum(f, build, axes) -> float:
    """sum_{ijk} w_i w_j w_k f(build(x_i, y_j, z_k)) evaluated in chunks."""
    (x, wx), (y, wy), (z, wz) = axes
    total = 0.0
    per = max(1, _CHUNK // (len(y) * len(z)))
    for s in range(0, len(x), per):
        xs = x[s:s + per]
        X, Y, Z = np.meshgrid(xs, y, z, indexing="ij")
        W = wx[s:s + per][:, None, None] * wy[None, :, None] * wz[None, None, :]
        mats, dens = build(X.ravel(), Y.ravel(), Z.ravel())
        total += float(np.sum(W.ravel() * dens * f(mats)))
    return total


def _col_norms(c: np.ndarray):
    return np.linalg.norm(c[:, 0]), np.linalg.norm(c[:, 1])


def iwasawa_integral(f: MatrixBump, nodes: int = 64) -> float:
    """int f(k_theta a_x n_y) exp(2x) dtheta dx dy."""
    c = f.matrix
    r = f.radius
    n1, n2 = _col_norms(c)
    if n1 <= r:
        raise ValueError("support reaches the locus g e_1 = 0")
    # first column g e1 = e^x (cos theta, sin theta)
    phi = math.atan2(c[1, 0], c[0, 0])
    dphi = math.asin(min(1.0, r / n1))
    xr = (math.log(n1 - r), math.log(n1 + r))
    yb = (n2 + r) / (n1 - r)

    def build(th, x, y):
        k = rotation2(th)
        an = np.zeros(th.shape + (2, 2))
        an[:, 0, 0] = np.exp(x)
        an[:, 0, 1] = np.exp(x) * y
        an[:, 1, 1] = np.exp(-x)
        return k @ an, np.exp(2 * x)

    return _tensor_sum(f, build, [_gl(phi - dphi, phi + dphi, nodes), _gl(*xr, nodes), _gl(-yb, yb, nodes)])


def kak_integral(f: MatrixBump, nodes: int = 64, angle_nodes: int = 256) -> float:
    """int f(k_a diag(e^x, e^-x) k_b) sinh(2x) da dx db over x >= 0."""
    c = f.matrix
    r = f.radius
    s = np.linalg.svd(c, compute_uv=False)
    x_lo = math.log(max(1.0, s[0] - r))
    x_hi = math.log(s[0] + r)

    def build(a, x, b):
        d = np.zeros(a.shape + (2, 2))
        d[:, 0, 0] = np.exp(x)
        d[:, 1, 1] = np.exp(-x)
        return rotation2(a) @ d @ rotation2(b), np.sinh(2 * x)

    return _tensor_sum(f, build, [_periodic(angle_nodes), _gl(x_lo, x_hi, nodes), _periodic(angle_nodes)])


def bruhat_integral(f: MatrixBump, nodes: int = 64) -> float:
    """int f(nbar(u) m a_x n(y)) exp(2x) du dx dy, summed over m = +-1."""
    c = f.matrix
    r = f.radius
    if abs(c[0, 0]) <= r:
        raise ValueError("support is not inside the open Bruhat cell")
    m = math.copysign(1.0, c[0, 0])
    lo = abs(c[0, 0]) - r
    hi = abs(c[0, 0]) + r
    ub = (abs(c[1, 0]) + r) / lo
    yb = (abs(c[0, 1]) + r) / lo

    def build(u, x, y):
        g = np.zeros(u.shape + (2, 2))
        e = m * np.exp(x)
        g[:, 0, 0] = e
        g[:, 0, 1] = e * y
        g[:, 1, 0] = u * e
        g[:, 1, 1] = u * e * y + m * np.exp(-x)
        return g, np.exp(2 * x)

    return _tensor_sum(f, build, [_gl(-ub, ub, nodes), _gl(math.log(lo), math.log(hi), nodes), _gl(-yb, yb, nodes)])


def three_integrals(f: MatrixBump, nodes: int = 64, angle_nodes: int = 256) -> dict:
    return {
        "kak": kak_integral(f, nodes, angle_nodes),
        "iwasawa": iwasawa_integral(f, nodes),
        "bruhat": bruhat_integral(f, nodes),
    }


def haar_crosscheck(test_fns, cfg: QuadratureConfig | None = None, nodes: int = 64,
                    tolerance: float = 0.01) -> VerificationReport:
    """Calibrate the three coordinate measures on test_fns[0], compare the rest."""
    cfg = QuadratureConfig() if cfg is None else cfg
    fns = list(test_fns)
    if len(fns) < 2:
        raise ValueError("need at least two test functions")
    angle_nodes = max(64, min(cfg.node_count // 8, 512))
    values = [three_integrals(f, nodes, angle_nodes) for f in fns]
    ref = values[0]
    const = {k: ref["kak"] / ref[k] for k in ("iwasawa", "bruhat")}
    rows = []
    worst = 0.0
    for v in values[1:]:
        base = v["kak"]
        errs = [abs(const[k] * v[k] - base) / abs(base) for k in ("iwasawa", "bruhat")]
        rows.append(tuple([base] + [const[k] * v[k] for k in ("iwasawa", "bruhat")]))
        worst = max(worst, *errs)
    return VerificationReport(
        check="haar-crosscheck",
        rule="max<=",
        tolerance=tolerance,
        observed_min=0.0,
        observed_max=worst,
        parameters={"functions": len(fns), "nodes": nodes, "angle_nodes": angle_nodes},
        seed=cfg.seed,
        series=tuple(rows),
        series_labels=("kak", "iwasawa_calibrated", "bruhat_calibrated"),
        details={"calibration": const, "raw": values},
    )


def default_bumps() -> list:
    """Two bumps with unrelated centres, both inside the open Bruhat cell."""
    return [
        MatrixBump(((1.0, 0.0), (0.0, 1.0)), 0.5),
        MatrixBump(((1.5, 0.4), (0.25, 2.0 / 3.0 + 0.4 * 0.25 / 1.5)), 0.45),
    ]


@lru_cache(maxsize=None)
def kak_to_bruhat_constant(nodes: int = 64) -> float:
    """c with int f dg_bruhat = c * int f dg_kak, from a reference bump."""
    f = default_bumps()[0]
    return bruhat_integral(f, nodes) / kak_integral(f, nodes, 256)
