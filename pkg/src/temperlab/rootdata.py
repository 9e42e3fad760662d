"""Restricted root data of sl(n, R) and finite weight systems.

Weights are covectors with multiplicities.  Everything here is exact
(Fractions) unless a weight system was built from floating eigenvalue
data, in which case it is flagged inexact.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from temperlab.matgroup import CartanVector
from temperlab.numbers import format_fraction, parse_number


class DomainError(ValueError):
    pass


def _coerce(x):
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return float(x)


def _canonical_traceless(cov: tuple) -> tuple:
    mean = sum(cov) / len(cov)
    return tuple(c - mean for c in cov)


@dataclass(frozen=True)
class Weight:
    covector: tuple
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "covector", tuple(_coerce(x) for x in self.covector))
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise ValueError("multiplicity must be a positive integer")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.covector)

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.covector)

    def __call__(self, x: Sequence):
        return sum(c * v for c, v in zip(self.covector, x))


@dataclass(frozen=True)
class WeightSystem:
    """Weights on R^dim with multiplicities.

    With ``traceless`` the covectors live on the sum-zero hyperplane and
    are stored in the canonical representative whose coordinates sum to 0.
    Zero covectors are folded into ``zero_multiplicity``; equal covectors
    are merged.
    """

    dim: int
    weights: tuple = ()
    zero_multiplicity: int = 0
    traceless: bool = False
    declared_dim: int | None = None

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")
        merged: "OrderedDict[tuple, int]" = OrderedDict()
        zero = int(self.zero_multiplicity)
        if zero < 0:
            raise ValueError("zero multiplicity must be nonnegative")
        for w in self.weights:
            if not isinstance(w, Weight):
                w = Weight(*w)
            if len(w.covector) != self.dim:
                raise ValueError(f"covector of length {len(w.covector)} in a system of dimension {self.dim}")
            cov = _canonical_traceless(w.covector) if self.traceless and self.dim else w.covector
            if all(c == 0 for c in cov):
                zero += w.multiplicity
                continue
            merged[cov] = merged.get(cov, 0) + w.multiplicity
        object.__setattr__(self, "weights", tuple(Weight(c, m) for c, m in merged.items()))
        object.__setattr__(self, "zero_multiplicity", zero)
        if self.declared_dim is not None and self.total_multiplicity != self.declared_dim:
            raise ValueError(
                f"multiplicities sum to {self.total_multiplicity}, declared dimension {self.declared_dim}"
            )

    @property
    def total_multiplicity(self) -> int:
        return sum(w.multiplicity for w in self.weights) + self.zero_multiplicity

    @property
    def exact(self) -> bool:
        return all(w.exact for w in self.weights)

    def covector_matrix(self) -> np.ndarray:
        """Float array (k, dim) of covectors."""
        if not self.weights:
            return np.zeros((0, self.dim))
        return np.array([[float(c) for c in w.covector] for w in self.weights])

    def multiplicities(self) -> np.ndarray:
        return np.array([w.multiplicity for w in self.weights], dtype=float)

    def scaled(self, factor) -> "WeightSystem":
        return WeightSystem(
            self.dim,
            tuple(Weight(tuple(factor * c for c in w.covector), w.multiplicity) for w in self.weights),
            self.zero_multiplicity,
            self.traceless,
        )

    def is_symmetric(self) -> bool:
        table = {w.covector: w.multiplicity for w in self.weights}
        return all(table.get(tuple(-c for c in cov)) == m for cov, m in table.items())

    def to_json(self) -> dict:
        def fmt(x):
            return format_fraction(x) if isinstance(x, Fraction) else float(x)

        out = {
            "dim": self.dim,
            "zero_mult": self.zero_multiplicity,
            "weights": [{"w": [fmt(c) for c in w.covector], "m": w.multiplicity} for w in self.weights],
        }
        if self.traceless:
            out["traceless"] = True
        return out

    @classmethod
    def from_json(cls, data) -> "WeightSystem":
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        weights = tuple(Weight(tuple(_coerce(x) for x in w["w"]), int(w["m"])) for w in data["weights"])
        return cls(int(data["dim"]), weights, int(data.get("zero_mult", 0)), bool(data.get("traceless", False)))


def _unit(n: int, i: int) -> tuple:
    return tuple(Fraction(int(k == i)) for k in range(n))


def restricted_roots(n: int) -> WeightSystem:
    """Roots e_i - e_j (i != j) of sl(n) on the traceless diagonal, multiplicity 1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    weights = []
    for i in range(n):
        for j in range(n):
            if i != j:
                weights.append(Weight(tuple(a - b for a, b in zip(_unit(n, i), _unit(n, j))), 1))
    return WeightSystem(n, tuple(weights), zero_multiplicity=n - 1, traceless=True, declared_dim=n * n - 1)


def positive_roots(n: int) -> list:
    return [tuple(a - b for a, b in zip(_unit(n, i), _unit(n, j))) for i in range(n) for j in range(i + 1, n)]


def rho_form(n: int) -> tuple:
    """Half sum of positive roots: coordinates (n + 1 - 2i) / 2."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return tuple(Fraction(n + 1 - 2 * i, 2) for i in range(1, n + 1))


def pair(covector: Sequence, x: Sequence):
    return sum(c * v for c, v in zip(covector, x))


def dominant_representative(x) -> CartanVector:
    """Sort coordinates in decreasing order (Weyl group of sl(n) = permutations)."""
    coords = x.coords if isinstance(x, CartanVector) else tuple(x)
    return CartanVector(tuple(sorted(coords, reverse=True)), dominant=True)


def weyl_orbit(x: Sequence) -> set:
    return set(permutations(tuple(x)))


def log_kak_density(x, n: int | None = None) -> float:
    """log of prod_{i<j} sinh(x_i - x_j) for dominant x; -inf on walls."""
    coords = _dominant_coords(x, n)
    total = 0.0
    for i in range(len(coords)):
        for j in range(i + 1, len(coords)):
            d = coords[i] - coords[j]
            if d <= 0:
                return -math.inf
            # log sinh d = d - log 2 + log1p(-exp(-2d))
            total += d - math.log(2.0) + math.log1p(-math.exp(-2.0 * d))
    return total


def kak_density(x, n: int | None = None) -> float:
    """prod_{i<j} sinh(x_i - x_j): Jacobian of Cartan coordinates at a dominant x."""
    coords = _dominant_coords(x, n)
    out = 1.0
    for i in range(len(coords)):
        for j in range(i + 1, len(coords)):
            out *= math.sinh(coords[i] - coords[j])
    return out


def _dominant_coords(x, n):
    coords = tuple(float(c) for c in (x.coords if isinstance(x, CartanVector) else x))
    if n is not None and len(coords) != n:
        raise ValueError(f"expected {n} coordinates, got {len(coords)}")
    scale = max(1.0, max(abs(c) for c in coords))
    if any(a < b - 1e-12 * scale for a, b in zip(coords, coords[1:])):
        raise DomainError("KAK density is defined on the closed positive chamber only")
    if abs(sum(coords)) > 1e-9 * scale * len(coords):
        raise DomainError("Cartan coordinates must sum to 0")
    return coords


def restrict_weights(ws: WeightSystem, embedding) -> WeightSystem:
    """Pull covectors back along a linear map R^d' -> R^dim.

    ``embedding`` is a dim x d' matrix (rows indexed by ambient coordinates,
    columns spanning the subspace).  Pullbacks that vanish move their
    multiplicity into ``zero_multiplicity``.
    """
    rows = [list(r) for r in embedding]
    if len(rows) != ws.dim:
        raise ValueError(f"embedding has {len(rows)} rows, weight system has dimension {ws.dim}")
    d_new = len(rows[0]) if rows else 0
    if any(len(r) != d_new for r in rows):
        raise ValueError("ragged embedding matrix")
    cols = [[_coerce(rows[i][k]) for i in range(ws.dim)] for k in range(d_new)]
    if d_new == ws.dim and all(cols[k][i] == (i == k) for i in range(ws.dim) for k in range(d_new)):
        return ws
    if ws.traceless:
        for col in cols:
            if abs(sum(col)) > 1e-12:
                raise ValueError("embedding columns must be traceless for a traceless weight system")
    weights = [Weight(tuple(pair(w.covector, col) for col in cols), w.multiplicity) for w in ws.weights]
    return WeightSystem(d_new, tuple(weights), ws.zero_multiplicity)


def coroot_embedding(n: int, start: int, size: int) -> list:
    """n x (size-1) matrix whose columns are E_ii - E_{i+1,i+1} inside a diagonal block."""
    cols = []
    for i in range(size - 1):
        col = [Fraction(0)] * n
        col[start + i] = Fraction(1)
        col[start + i + 1] = Fraction(-1)
        cols.append(col)
    return [[cols[k][i] for k in range(len(cols))] for i in range(n)]


def embed(embedding, y: Sequence[float]) -> np.ndarray:
    """Image of parameter vectors under an embedding matrix (float)."""
    e = np.array([[float(x) for x in r] for r in embedding]) if len(embedding) else np.zeros((0, 0))
    return np.asarray(y, dtype=float) @ e.T
