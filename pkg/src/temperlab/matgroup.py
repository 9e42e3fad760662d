"""Matrix realization of G = SL(n, R).

The Cartan subspace is the traceless diagonal, K = SO(n) and N is the
upper unipotent group.  With these choices the Cartan projection is the
vector of log singular values and the Iwasawa projection is read off the
diagonal of the QR factor.

The Bruhat chart used for Monte-Carlo work is g = nbar(u) exp(h) n(v),
i.e. the LDU factorization; its Haar density is exp(2 rho(h)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from temperlab.config import get_settings
from temperlab.numbers import format_fraction, parse_number


class NumericInputError(ValueError):
    """Non-finite or otherwise unusable numeric input."""


class UnsupportedSubgroupError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Group elements
# ---------------------------------------------------------------------------


def _det_fraction(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det


def _inverse_fraction(rows: Sequence[Sequence[Fraction]]):
    n = len(rows)
    a = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for k in range(n):
        piv = next(i for i in range(k, n) if a[i][k] != 0)
        a[k], a[piv] = a[piv], a[k]
        p = a[k][k]
        a[k] = [x / p for x in a[k]]
        for i in range(n):
            if i != k and a[i][k]:
                f = a[i][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return tuple(tuple(r[n:]) for r in a)


class GroupElement:
    """An element of SL(n, R), stored as floats or as exact rationals."""

    __slots__ = ("_rows", "_array", "exact", "n")

    def __init__(self, entries, exact: bool | None = None, tol: float | None = None):
        if isinstance(entries, GroupElement):
            entries = entries._rows if entries.exact else entries._array
        if exact is None:
            exact = _looks_rational(entries)
        tol = get_settings().det_tol if tol is None else tol
        if exact:
            rows = tuple(tuple(parse_number(x, exact=True) for x in r) for r in entries)
            n = len(rows)
            if n < 2 or any(len(r) != n for r in rows):
                raise ValueError("group elements are square matrices of size >= 2")
            det = _det_fraction(rows)
            if det != 1:
                raise ValueError(f"determinant is {det}, expected exactly 1")
            self._rows = rows
            self._array = np.array([[float(x) for x in r] for r in rows])
        else:
            arr = np.array(entries, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
                raise ValueError("group elements are square matrices of size >= 2")
            if not np.all(np.isfinite(arr)):
                raise NumericInputError("non-finite matrix entries")
            det = np.linalg.det(arr)
            if abs(det - 1.0) > tol:
                raise ValueError(f"determinant is {det!r}, expected 1 within {tol}")
            arr.setflags(write=False)
            self._rows = None
            self._array = arr
        self.exact = bool(exact)
        self.n = len(self._array)

    @classmethod
    def identity(cls, n: int, exact: bool = False) -> "GroupElement":
        if exact:
            return cls([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], exact=True)
        return cls(np.eye(n), exact=False)

    @property
    def matrix(self) -> np.ndarray:
        return self._array

    @property
    def rows(self) -> tuple:
        if not self.exact:
            raise ValueError("floating group element has no exact rows")
        return self._rows

    def inverse(self) -> "GroupElement":
        if self.exact:
            return GroupElement(_inverse_fraction(self._rows), exact=True)
        return GroupElement(np.linalg.inv(self._array), exact=False, tol=1e-6)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if self.exact and other.exact:
            n = self.n
            prod = tuple(
                tuple(sum(self._rows[i][k] * other._rows[k][j] for k in range(n)) for j in range(n))
                for i in range(n)
            )
            return GroupElement(prod, exact=True)
        return GroupElement(self._array @ other._array, exact=False, tol=1e-6)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        if self.exact and other.exact:
            return self._rows == other._rows
        return self.n == other.n and bool(np.array_equal(self._array, other._array))

    def __hash__(self) -> int:
        if self.exact:
            return hash(self._rows)
        return hash(self._array.tobytes())

    def __repr__(self) -> str:
        if self.exact:
            body = [[format_fraction(x) for x in r] for r in self._rows]
            return f"GroupElement({body}, exact=True)"
        return f"GroupElement({self._array.tolist()})"

    def to_json(self) -> list:
        if self.exact:
            return [[format_fraction(x) for x in r] for r in self._rows]
        return self._array.tolist()


def _looks_rational(entries) -> bool:
    if isinstance(entries, np.ndarray):
        return entries.dtype.kind in "iu"
    try:
        flat = [x for r in entries for x in r]
    except TypeError:
        return False
    return all(isinstance(x, (int, Fraction, str)) and not isinstance(x, bool) for x in flat)


def as_matrix(g: Union[GroupElement, np.ndarray, Sequence]) -> np.ndarray:
    if isinstance(g, GroupElement):
        return g.matrix
    arr = np.asarray(g, dtype=float)
    return arr


# ---------------------------------------------------------------------------
# Cartan vectors and projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CartanVector:
    """A point of the traceless diagonal subspace."""

    coords: tuple
    dominant: bool = False

    def __post_init__(self):
        coords = tuple(float(x) for x in self.coords)
        object.__setattr__(self, "coords", coords)
        tol = get_settings().trace_tol
        if not all(math.isfinite(x) for x in coords):
            raise NumericInputError("non-finite Cartan coordinates")
        scale = max(1.0, max((abs(x) for x in coords), default=0.0))
        if abs(sum(coords)) > tol * scale * len(coords):
            raise ValueError(f"Cartan coordinates must sum to 0, got {sum(coords)!r}")
        if self.dominant and any(a < b - tol * scale for a, b in zip(coords, coords[1:])):
            raise ValueError("dominant Cartan vector must have weakly decreasing coordinates")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def n(self) -> int:
        return len(self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


def _log_singular_values(stack: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(stack)):
        raise NumericInputError("non-finite matrix entries")
    try:
        sv = np.linalg.svd(stack, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericInputError(f"singular value computation failed: {exc}") from exc
    if np.any(sv <= 0):
        raise NumericInputError("matrix is singular")
    return np.log(sv)


def cartan_projection_batch(stack: np.ndarray) -> np.ndarray:
    """Cartan projections of a stack of matrices, shape (m, n)."""
    logs = _log_singular_values(np.asarray(stack, dtype=float))
    # det = 1 up to rounding; re-centre so each row is exactly traceless
    return logs - logs.mean(axis=-1, keepdims=True)


def cartan_projection(g) -> CartanVector:
    """kappa(g): log singular values in decreasing order."""
    m = as_matrix(g)
    return CartanVector(tuple(cartan_projection_batch(m[None])[0]), dominant=True)


def _qr_positive(stack: np.ndarray):
    q, r = np.linalg.qr(stack)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    sign = np.where(d < 0, -1.0, 1.0)
    q = q * sign[..., None, :]
    r = r * sign[..., :, None]
    return q, r


def iwasawa_batch(stack: np.ndarray) -> np.ndarray:
    """Iwasawa projections of a stack of matrices, shape (m, n)."""
    stack = np.asarray(stack, dtype=float)
    if not np.all(np.isfinite(stack)):
        raise NumericInputError("non-finite matrix entries")
    _, r = _qr_positive(stack)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    if np.any(d <= 0):
        raise NumericInputError("rank-deficient matrix in Iwasawa projection")
    logs = np.log(d)
    return logs - logs.mean(axis=-1, keepdims=True)


def iwasawa_projection(g) -> CartanVector:
    """eta(g) with g in K exp(eta(g)) N."""
    m = as_matrix(g)
    return CartanVector(tuple(iwasawa_batch(m[None])[0]))


def iwasawa_decomposition(g):
    """Return (k, a, n) with g = k a n, k orthogonal, a positive diagonal, n upper unipotent."""
    m = as_matrix(g)
    q, r = _qr_positive(m)
    d = np.diag(r)
    return q, np.diag(d), r / d[:, None]


# ---------------------------------------------------------------------------
# Subgroup descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteGenerators:
    gens: tuple
    exact: bool = True

    def __post_init__(self):
        gens = tuple(g if isinstance(g, GroupElement) else GroupElement(g, exact=self.exact) for g in self.gens)
        if not gens:
            raise ValueError("generator list must be nonempty")
        n = gens[0].n
        if any(g.n != n for g in gens):
            raise ValueError("generators must share the same size")
        if self.exact and not all(g.exact for g in gens):
            raise ValueError("exact generator set contains floating elements")
        for g in gens:
            g.inverse()  # validates the inverse as well
        object.__setattr__(self, "gens", gens)

    @property
    def n(self) -> int:
        return self.gens[0].n

    def with_inverses(self) -> tuple:
        out = []
        for g in self.gens:
            for h in (g, g.inverse()):
                if h not in out:
                    out.append(h)
        return tuple(out)

    def conjugate(self, g: GroupElement) -> "DiscreteGenerators":
        gi = g.inverse()
        return DiscreteGenerators(tuple(g @ x @ gi for x in self.gens), exact=self.exact and g.exact)


@dataclass(frozen=True)
class BlockReductive:
    """Product of SL(size) blocks placed on the diagonal at given offsets."""

    n: int
    blocks: tuple  # ((start, size), ...)

    def __post_init__(self):
        blocks = tuple((int(s), int(k)) for s, k in self.blocks)
        used = set()
        for start, size in blocks:
            if size < 2 or start < 0 or start + size > self.n:
                raise ValueError(f"block ({start}, {size}) does not fit in SL({self.n})")
            span = set(range(start, start + size))
            if used & span:
                raise ValueError("blocks overlap")
            used |= span
        object.__setattr__(self, "blocks", blocks)


@dataclass(frozen=True)
class DiagonalTorus:
    n: int


@dataclass(frozen=True)
class UpperUnipotent:
    n: int


@dataclass(frozen=True)
class CatalogName:
    name: str


SubgroupSpec = Union[DiscreteGenerators, BlockReductive, DiagonalTorus, UpperUnipotent, CatalogName]


def elementary(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n))
    e[i, j] = 1.0
    return e


def coroot(n: int, i: int, j: int) -> np.ndarray:
    """E_ii - E_jj."""
    return elementary(n, i, i) - elementary(n, j, j)


def sl_basis(n: int) -> list:
    """Basis of sl(n): off-diagonal units then E_ii - E_{i+1,i+1}."""
    off = [elementary(n, i, j) for i in range(n) for j in range(n) if i != j]
    return off + [coroot(n, i, i + 1) for i in range(n - 1)]


def _resolve(spec):
    if isinstance(spec, CatalogName):
        from temperlab.catalog import catalog_entry

        return catalog_entry(spec.name).h_spec
    return spec


def lie_algebra_basis(spec) -> list:
    """Basis matrices of the Lie algebra of a connected subgroup spec."""
    spec = _resolve(spec)
    if isinstance(spec, DiagonalTorus):
        return [coroot(spec.n, i, i + 1) for i in range(spec.n - 1)]
    if isinstance(spec, UpperUnipotent):
        n = spec.n
        return [elementary(n, i, j) for i in range(n) for j in range(i + 1, n)]
    if isinstance(spec, BlockReductive):
        out = []
        for start, size in spec.blocks:
            for b in sl_basis(size):
                m = np.zeros((spec.n, spec.n))
                m[start:start + size, start:start + size] = b
                out.append(m)
        return out
    raise UnsupportedSubgroupError(f"no Lie algebra basis for {type(spec).__name__}")


def split_cartan_basis(spec) -> list:
    """Basis of a maximal split abelian subalgebra of the subgroup's Lie algebra."""
    spec = _resolve(spec)
    if isinstance(spec, DiagonalTorus):
        return lie_algebra_basis(spec)
    if isinstance(spec, UpperUnipotent):
        return []
    if isinstance(spec, BlockReductive):
        out = []
        for start, size in spec.blocks:
            for i in range(size - 1):
                out.append(coroot(spec.n, start + i, start + i + 1))
        return out
    raise UnsupportedSubgroupError(f"no Cartan basis for {type(spec).__name__}")


def structure_action(basis: Sequence[np.ndarray], y: np.ndarray) -> np.ndarray:
    """Matrix of ad(y) on span(basis), by least squares in that basis."""
    b = np.stack([np.asarray(x, dtype=float).ravel() for x in basis], axis=1)
    imgs = np.stack([(y @ x - x @ y).ravel() for x in basis], axis=1)
    coeffs, *_ = np.linalg.lstsq(b, imgs, rcond=None)
    resid = b @ coeffs - imgs
    if np.max(np.abs(resid), initial=0.0) > 1e-8:
        raise ValueError("basis does not span a subalgebra closed under the bracket")
    return coeffs


def modular_form(basis: Sequence[np.ndarray]) -> np.ndarray:
    """Covector Y -> -trace(ad Y) on span(basis), in basis coordinates."""
    if not basis:
        return np.zeros(0)
    return np.array([-np.trace(structure_action(basis, y)) for y in basis])


def modular_character(h_spec) -> np.ndarray:
    """Differential of the modular character of H, as a covector on its Lie algebra."""
    h_spec = _resolve(h_spec)
    if isinstance(h_spec, DiscreteGenerators):
        raise UnsupportedSubgroupError("discrete subgroups carry counting measure; no modular form")
    form = modular_form(lie_algebra_basis(h_spec))
    form[np.abs(form) < 1e-12] = 0.0
    return form


# ---------------------------------------------------------------------------
# Generators file
# ---------------------------------------------------------------------------


def load_generators(source) -> DiscreteGenerators:
    """Read {"n": int, "exact": bool, "gens": [[[entry, ...], ...], ...]}."""
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text())
    else:
        data = source
    n = int(data["n"])
    exact = bool(data.get("exact", True))
    gens = []
    for g in data["gens"]:
        rows = [[parse_number(x, exact=exact) for x in r] for r in g]
        if len(rows) != n:
            raise ValueError(f"generator has {len(rows)} rows, expected {n}")
        gens.append(GroupElement(rows, exact=exact))
    return DiscreteGenerators(tuple(gens), exact=exact)


def dump_generators(spec: DiscreteGenerators) -> dict:
    return {"n": spec.n, "exact": spec.exact, "gens": [g.to_json() for g in spec.gens]}


# ---------------------------------------------------------------------------
# Bruhat chart and sampling
# ---------------------------------------------------------------------------


def chart_dim(n: int) -> int:
    return n * n - 1


def _lower_index(n: int):
    return [(i, j) for i in range(n) for j in range(i)]


def _upper_index(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def rho_coefficients(n: int) -> np.ndarray:
    """rho as a covector on the n diagonal coordinates: (n + 1 - 2i) / 2."""
    return np.array([(n + 1 - 2 * i) / 2 for i in range(1, n + 1)])


def split_chart(coords: np.ndarray, n: int):
    m = n * (n - 1) // 2
    coords = np.asarray(coords, dtype=float)
    u = coords[..., :m]
    h = coords[..., m:m + n - 1]
    v = coords[..., m + n - 1:]
    hfull = np.concatenate([h, -h.sum(axis=-1, keepdims=True)], axis=-1)
    return u, hfull, v


def bruhat_compose(coords: np.ndarray, n: int) -> np.ndarray:
    """Matrices nbar(u) exp(h) n(v) for chart coordinates of shape (..., n^2 - 1)."""
    coords = np.asarray(coords, dtype=float)
    u, h, v = split_chart(coords, n)
    shape = coords.shape[:-1]
    lower = np.broadcast_to(np.eye(n), shape + (n, n)).copy()
    upper = lower.copy()
    for k, (i, j) in enumerate(_lower_index(n)):
        lower[..., i, j] = u[..., k]
    for k, (i, j) in enumerate(_upper_index(n)):
        upper[..., i, j] = v[..., k]
    return (lower * np.exp(h)[..., None, :]) @ upper


def bruhat_factor(stack: np.ndarray, pivot_tol: float = 1e-12):
    """LDU factorization of a stack of matrices.

    Returns (coords, signs, ok): chart coordinates with log|D|, the signs of
    D (the M-component) and a mask of matrices inside the open cell.
    """
    a = np.array(stack, dtype=float, copy=True)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[None]
    m, n, _ = a.shape
    lower = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    ok = np.ones(m, dtype=bool)
    for k in range(n):
        piv = a[:, k, k]
        bad = np.abs(piv) < pivot_tol
        ok &= ~bad
        safe = np.where(bad, 1.0, piv)
        for i in range(k + 1, n):
            f = a[:, i, k] / safe
            lower[:, i, k] = f
            a[:, i, :] -= f[:, None] * a[:, k, :]
    d = np.diagonal(a, axis1=1, axis2=2).copy()
    dsafe = np.where(np.abs(d) < pivot_tol, 1.0, d)
    upper = a / dsafe[:, :, None]
    signs = np.sign(d)
    logs = np.log(np.abs(dsafe))
    u = np.stack([lower[:, i, j] for i, j in _lower_index(n)], axis=1) if n > 1 else np.zeros((m, 0))
    v = np.stack([upper[:, i, j] for i, j in _upper_index(n)], axis=1) if n > 1 else np.zeros((m, 0))
    coords = np.concatenate([u, logs[:, : n - 1], v], axis=1)
    if squeeze:
        return coords[0], signs[0], bool(ok[0])
    return coords, signs, ok


def haar_density(coords: np.ndarray, n: int) -> np.ndarray:
    """exp(2 rho(h)) in the Bruhat chart."""
    _, h, _ = split_chart(coords, n)
    return np.exp(2.0 * h @ rho_coefficients(n))


@dataclass(frozen=True)
class ChartBox:
    """Axis-aligned box in Bruhat chart coordinates (nbar, log-diagonal, n)."""

    n: int
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        d = chart_dim(self.n)
        if len(lo) != d or len(hi) != d:
            raise ValueError(f"chart box for SL({self.n}) needs {d} coordinates")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError("empty chart box")
        if not all(math.isfinite(x) for x in lo + hi):
            raise ValueError("chart box must be bounded")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, n: int, half_width: float, a_half_width: float | None = None) -> "ChartBox":
        """Box centred at the identity; unipotent and diagonal half-widths may differ."""
        m = n * (n - 1) // 2
        aw = half_width if a_half_width is None else a_half_width
        widths = [half_width] * m + [aw] * (n - 1) + [half_width] * m
        return cls(n, tuple(-w for w in widths), tuple(widths))

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords)
        return np.all((coords >= np.array(self.lo)) & (coords <= np.array(self.hi)), axis=-1)

    def contains_matrices(self, stack: np.ndarray) -> np.ndarray:
        coords, signs, ok = bruhat_factor(stack)
        inside = ok & np.all(signs > 0, axis=-1) & self.contains(coords)
        return inside


SAMPLE_CHUNK = 1 << 15


def _chunk_uniform(seed: int, chunk: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), int(chunk)])
    return rng.random((SAMPLE_CHUNK, dim))


def sample_chart_range(region: ChartBox, start: int, stop: int, seed: int) -> np.ndarray:
    """Uniform chart coordinates for sample indices [start, stop).

    Index i lives in chunk i // SAMPLE_CHUNK whose generator is seeded by
    (seed, chunk), so disjoint index ranges can be drawn independently.
    """
    if stop <= start:
        return np.zeros((0, chart_dim(region.n)))
    dim = chart_dim(region.n)
    lo = np.array(region.lo)
    span = np.array(region.hi) - lo
    out = []
    for chunk in range(start // SAMPLE_CHUNK, (stop - 1) // SAMPLE_CHUNK + 1):
        block = _chunk_uniform(seed, chunk, dim)
        a = max(start - chunk * SAMPLE_CHUNK, 0)
        b = min(stop - chunk * SAMPLE_CHUNK, SAMPLE_CHUNK)
        out.append(block[a:b])
    return lo + np.concatenate(out) * span


def sample_box_arrays(region: ChartBox, count: int, seed: int, start: int = 0):
    """Bulk form of sample_box: (coords, matrices, weights) arrays."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    coords = sample_chart_range(region, start, start + count, seed)
    mats = bruhat_compose(coords, region.n)
    w = region.volume * haar_density(coords, region.n) / max(count, 1)
    return coords, mats, w


def sample_box(region: ChartBox, count: int, seed: int) -> list:
    """Seeded Haar-weighted samples from a chart box.

    Returns (GroupElement, weight) pairs; sum(w * f(g)) estimates the Haar
    integral of f over the box.
    """
    if not isinstance(region, ChartBox):
        raise TypeError("region must be a ChartBox")
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return []
    _, mats, w = sample_box_arrays(region, count, seed)
    return [(GroupElement(m, exact=False, tol=1e-6), float(x)) for m, x in zip(mats, w)]


def random_orthogonal(rng: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Haar-distributed SO(n) elements via sign-corrected QR of Gaussian matrices."""
    shape = (n, n) if size is None else (size, n, n)
    z = rng.standard_normal(shape)
    q, r = np.linalg.qr(z)
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d = np.where(d == 0, 1.0, d)
    q = q * d[..., None, :]
    det = np.linalg.det(q)
    q[..., :, 0] *= np.sign(det)[..., None] if size is not None else np.sign(det)
    return q


def rotation2(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def diag_exp(x: Iterable[float]) -> np.ndarray:
    return np.diag(np.exp(np.asarray(list(x), dtype=float)))
