"""Exact local volume decay exponent beta = sup rho_h / rho_g on a split torus.

Both rho-functions are linear on every cone cut out by the kernels of
their weights.  Adding the coordinate hyperplanes makes every such cone
pointed, and a degree-0 homogeneous ratio of two linear forms with a
positive denominator attains its maximum over a pointed cone on an
extreme ray.  Every extreme ray is the kernel of some d-1 independent
hyperplanes of the arrangement, so enumerating those kernels (and both
signs of each) finds the exact maximum.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations
from pathlib import Path
from typing import Optional

import numpy as np

from temperlab.config import get_settings
from temperlab.rhofun import rho_eval, rho_eval_batch
from temperlab.rootdata import WeightSystem


class IllPosedPairError(ValueError):
    pass


class ArrangementTooLargeError(RuntimeError):
    pass


@dataclass(frozen=True)
class PairSpec:
    """(h-weights, g-weights) on a common parameter space of dimension ``dim``."""

    dim: int
    h_system: WeightSystem
    g_system: WeightSystem
    label: str = ""
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.h_system.dim != self.dim or self.g_system.dim != self.dim:
            raise ValueError("both weight systems must have the pair's dimension")
        if not self.allow_degenerate and self.dim > 0 and self.g_system.weights:
            rank = np.linalg.matrix_rank(self.g_system.covector_matrix())
            if rank < self.dim:
                raise ValueError(
                    "g-weights do not span the dual space; pass allow_degenerate=True "
                    "to accept rho_g vanishing on a subspace"
                )

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "dim": self.dim,
            "h": self.h_system.to_json(),
            "g": self.g_system.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> "PairSpec":
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        return cls(
            int(data["dim"]),
            WeightSystem.from_json(data["h"]),
            WeightSystem.from_json(data["g"]),
            str(data.get("label", "")),
            bool(data.get("allow_degenerate", False)),
        )


class Verdict(str, enum.Enum):
    TEMPERED = "Tempered"
    NOT_TEMPERED = "NotTempered"
    BOUNDARY_EXACT = "BoundaryExact"
    INDETERMINATE = "Indeterminate"

    @property
    def is_tempered(self) -> Optional[bool]:
        if self is Verdict.INDETERMINATE:
            return None
        return self in (Verdict.TEMPERED, Verdict.BOUNDARY_EXACT)


@dataclass
class ExponentReport:
    beta: object = None
    beta_exact: bool = True
    witness_ray: tuple = ()
    delta: Optional[float] = None
    delta_error: Optional[float] = None
    theta_hat: Optional[float] = None
    p: object = None
    verdict: Optional[Verdict] = None
    identity: str = ""
    method: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.beta is not None and not (0 <= self.beta <= 1):
            raise ValueError("beta must lie in [0, 1]")
        if self.p is not None and self.p < 1:
            raise ValueError("p must be at least 1")


# ---------------------------------------------------------------------------
# Exact rational linear algebra
# ---------------------------------------------------------------------------


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def primitive(vec) -> tuple:
    """Clear denominators, divide by the gcd, make the first nonzero entry positive."""
    vec = [Fraction(x) for x in vec]
    den = reduce(_lcm, (x.denominator for x in vec), 1)
    ints = [int(x * den) for x in vec]
    g = reduce(math.gcd, (abs(x) for x in ints), 0)
    if g == 0:
        return tuple(ints)
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def _kernel_line(rows: list, d: int):
    """Kernel of a (d-1) x d rational matrix if it is one-dimensional, else None."""
    a = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(d):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    if len(pivots) != d - 1:
        return None
    free = next(c for c in range(d) if c not in pivots)
    vec = [Fraction(0)] * d
    vec[free] = Fraction(1)
    for i, c in enumerate(pivots):
        vec[c] = -a[i][free]
    return vec


def arrangement_normals(pair: PairSpec) -> list:
    """Distinct hyperplane normals: weight kernels of both systems plus coordinate planes."""
    d = pair.dim
    normals = set()
    for ws in (pair.h_system, pair.g_system):
        for w in ws.weights:
            normals.add(primitive(w.covector))
    for i in range(d):
        normals.add(tuple(int(i == k) for k in range(d)))
    return sorted(normals)


def candidate_rays(pair: PairSpec) -> list:
    """Primitive integer rays spanned by (d-1)-subsets of arrangement normals."""
    d = pair.dim
    normals = arrangement_normals(pair)
    if d == 1:
        return [(1,)]
    count = math.comb(len(normals), d - 1)
    cap = get_settings().ray_subset_cap
    if count > cap:
        raise ArrangementTooLargeError(f"{count} candidate subsets exceed the cap of {cap}")
    rays = set()
    fr = [[Fraction(x) for x in nrm] for nrm in normals]
    for subset in combinations(range(len(normals)), d - 1):
        line = _kernel_line([fr[i] for i in subset], d)
        if line is not None:
            rays.add(primitive(line))
    return sorted(rays)


def _ratio(pair: PairSpec, x: tuple):
    num = rho_eval(pair.h_system, x)
    den = rho_eval(pair.g_system, x)
    if den == 0:
        if num == 0:
            return Fraction(0)
        raise IllPosedPairError(f"rho_g vanishes but rho_h does not at {x}")
    return Fraction(num) / Fraction(den)


def beta_exact(pair: PairSpec):
    """Exact maximum of rho_h / rho_g over nonzero points, with a witness ray.

    Ties go to the lexicographically smallest canonical ray, positive sign first.
    """
    d = pair.dim
    if not pair.h_system.weights:
        return Fraction(0), tuple([0] * d)
    if not pair.g_system.weights:
        raise IllPosedPairError("rho_g is identically zero while rho_h is not")
    if not (pair.h_system.exact and pair.g_system.exact):
        raise ValueError("beta_exact needs rational weights")
    best = None
    best_ray = None
    # rays arrive sorted, so keeping only strict improvements resolves ties
    for ray in candidate_rays(pair):
        for sign in (1, -1):
            x = tuple(sign * c for c in ray)
            r = _ratio(pair, x)
            if best is None or r > best:
                best, best_ray = r, x
    return best, best_ray


def unit_directions(d: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return z / norms


def beta_sample_oracle(pair: PairSpec, samples: int, seed: int) -> float:
    """Max of the ratio over uniformly random unit directions (a lower bound for beta)."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if not pair.h_system.weights or pair.dim == 0:
        return 0.0
    best = 0.0
    chunk = 1 << 15
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u = unit_directions(pair.dim, m, [seed, done])
        num = rho_eval_batch(pair.h_system, u)
        den = rho_eval_batch(pair.g_system, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        best = max(best, float(np.max(r)))
        done += m
    return best


def verdict_from_exponent(value, kind: str = "delta", error_bar: float | None = None) -> Verdict:
    """Temperedness verdict from delta (or beta for reductive H): tempered iff <= 1/2.

    Exact rationals are compared directly, and exactly 1/2 is flagged as
    BoundaryExact.  Floating estimates need value +- error_bar strictly on
    one side of 1/2; otherwise the verdict is Indeterminate.
    """
    if kind not in ("delta", "beta-reductive", "beta-algebraic", "theta"):
        raise ValueError(f"unknown exponent kind {kind!r}")
    exact = isinstance(value, (Fraction, int)) and not isinstance(value, bool) and error_bar is None
    if exact:
        value = Fraction(value)
        if value < 0:
            raise ValueError("exponents are nonnegative")
        if value > 1:
            warnings.warn(f"exponent {value} exceeds 1; clamping", RuntimeWarning)
            value = Fraction(1)
        if value == Fraction(1, 2):
            return Verdict.BOUNDARY_EXACT
        return Verdict.TEMPERED if value < Fraction(1, 2) else Verdict.NOT_TEMPERED
    value = float(value)
    bar = 0.0 if error_bar is None else float(error_bar)
    if value < 0:
        if value + bar < 0:
            raise ValueError("exponents are nonnegative")
        value = 0.0
    if value > 1:
        warnings.warn(f"exponent estimate {value} exceeds 1; clamping", RuntimeWarning)
        value = 1.0
    if value + bar < 0.5:
        return Verdict.TEMPERED
    if value - bar > 0.5:
        return Verdict.NOT_TEMPERED
    return Verdict.INDETERMINATE


INFINITY = math.inf


def p_from_theta(theta):
    """Optimal integrability exponent p = 1 / (1 - theta); theta = 1 gives infinity."""
    exact = isinstance(theta, (Fraction, int)) and not isinstance(theta, bool)
    if not (0 <= theta <= 1):
        raise ValueError("theta must lie in [0, 1]")
    if theta == 1:
        return INFINITY
    if exact:
        return 1 / (1 - Fraction(theta))
    return 1.0 / (1.0 - float(theta))
