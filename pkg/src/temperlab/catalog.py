"""Named subgroup pairs (G, H) with G = SL(n, R)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from temperlab.beta_solver import PairSpec
from temperlab.matgroup import (
    BlockReductive,
    DiagonalTorus,
    DiscreteGenerators,
    GroupElement,
    UpperUnipotent,
)
from temperlab.rootdata import Weight, WeightSystem, restrict_weights, restricted_roots


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    n: int
    h_spec: object
    pair: Optional[PairSpec]
    embedding: Optional[tuple]
    expected_beta: Optional[Fraction]
    provenance: str
    reductive: bool
    description: str = ""
    depth_schedule: tuple = ()
    theta_ray: tuple = ()
    theta_tmax: float = 4.0

    @property
    def discrete(self) -> bool:
        return isinstance(self.h_spec, DiscreteGenerators)

    def to_json(self) -> dict:
        spec = self.h_spec
        if isinstance(spec, DiscreteGenerators):
            h = {"kind": "discrete", "generators": [g.to_json() for g in spec.gens]}
        elif isinstance(spec, BlockReductive):
            h = {"kind": "block-reductive", "blocks": [list(b) for b in spec.blocks]}
        else:
            h = {"kind": type(spec).__name__}
        return {
            "name": self.name,
            "n": self.n,
            "h": h,
            "pair": self.pair.to_json() if self.pair is not None else None,
            "expected_beta": None if self.expected_beta is None else str(self.expected_beta),
            "provenance": self.provenance,
            "reductive": self.reductive,
            "description": self.description,
            "depth_schedule": list(self.depth_schedule),
            "theta_ray": [str(x) for x in self.theta_ray],
            "theta_tmax": self.theta_tmax,
        }


def _block_columns(n: int, blocks) -> list:
    cols = []
    for start, size in blocks:
        for i in range(size - 1):
            col = [Fraction(0)] * n
            col[start + i] = Fraction(1)
            col[start + i + 1] = Fraction(-1)
            cols.append(col)
    return cols


def _as_rows(n: int, cols: list) -> tuple:
    return tuple(tuple(cols[k][i] for k in range(len(cols))) for i in range(n))


def block_pair(n: int, blocks, label: str = "") -> tuple:
    """PairSpec and embedding for a product of SL(k) diagonal blocks.

    The h-weights are the roots e_i - e_j with i, j in a common block, the
    g-weights all roots of sl(n); both are pulled back to the coroot
    coordinates of the blocks.
    """
    emb = _as_rows(n, _block_columns(n, blocks))
    roots = restricted_roots(n)
    g_sys = restrict_weights(roots, emb)
    inside = []
    rank = 0
    for start, size in blocks:
        rank += size - 1
        idx = range(start, start + size)
        for w in roots.weights:
            support = [i for i, c in enumerate(w.covector) if c != 0]
            if all(i in idx for i in support):
                inside.append(w)
    h_roots = WeightSystem(n, tuple(inside), zero_multiplicity=rank, traceless=True)
    h_sys = restrict_weights(h_roots, emb)
    return PairSpec(len(emb[0]), h_sys, g_sys, label), emb


def torus_pair(n: int, label: str = "") -> tuple:
    emb = _as_rows(n, _block_columns(n, [(0, n)]))
    g_sys = restrict_weights(restricted_roots(n), emb)
    h_sys = WeightSystem(n - 1, (), zero_multiplicity=n - 1)
    return PairSpec(n - 1, h_sys, g_sys, label), emb


def unipotent_pair(n: int, label: str = "") -> PairSpec:
    """N has no split torus, so its pair lives on the zero space."""
    h_sys = WeightSystem(0, (), zero_multiplicity=n * (n - 1) // 2)
    g_sys = WeightSystem(0, (), zero_multiplicity=n * n - 1)
    return PairSpec(0, h_sys, g_sys, label)


def _dominant_ray(n: int) -> tuple:
    # (1, 0, ..., 0, -1): regular for n = 2, and the highest-root coroot in general
    return tuple([1] + [0] * (n - 2) + [-1])


@lru_cache(maxsize=None)
def _entries() -> tuple:
    out = []
    for n in range(3, 7):
        for k in range(2, n):
            name = f"sl{k}-in-sl{n}"
            pair, emb = block_pair(n, [(0, k)], name)
            if (n, k) in ((3, 2), (4, 2)):
                prov = "hand computation of rho_h / rho_g at the block coroot, confirmed by beta_sample_oracle"
            else:
                prov = "closed form (k-1)/(n-1) from the block coroot ray, confirmed by beta_sample_oracle"
            out.append(CatalogEntry(
                name, n, BlockReductive(n, ((0, k),)), pair, emb, Fraction(k - 1, n - 1), prov, True,
                f"SL({k}) in the upper-left block of SL({n})", theta_ray=_dominant_ray(n), theta_tmax=1.2,
            ))
    for n in (2, 3):
        pair, emb = torus_pair(n, f"torus-in-sl{n}")
        out.append(CatalogEntry(
            f"torus-in-sl{n}", n, DiagonalTorus(n), pair, emb, Fraction(0),
            "rho_h vanishes on an abelian Lie algebra", True,
            f"diagonal torus of SL({n})", theta_ray=_dominant_ray(n), theta_tmax=4.0 if n == 2 else 1.5,
        ))
    for n in (2, 3):
        out.append(CatalogEntry(
            f"unipotent-in-sl{n}", n, UpperUnipotent(n), unipotent_pair(n, f"unipotent-in-sl{n}"), None,
            Fraction(0), "no split torus in N, so the supremum is over the zero space", False,
            f"upper unipotent subgroup of SL({n})", theta_ray=_dominant_ray(n),
        ))
    for n in (2, 3, 4):
        pair, emb = block_pair(n, [(0, n)], f"g-equals-h-sl{n}")
        out.append(CatalogEntry(
            f"g-equals-h-sl{n}", n, BlockReductive(n, ((0, n),)), pair, emb, Fraction(1),
            "rho_h = rho_g identically", True, f"H = G = SL({n})", theta_ray=_dominant_ray(n),
        ))
    sl2z = DiscreteGenerators((GroupElement([[0, -1], [1, 0]]), GroupElement([[1, 1], [0, 1]])))
    out.append(CatalogEntry(
        "sl2z-lattice", 2, sl2z, None, None, None, "discrete: no weight data", False,
        "SL(2, Z), generated by S and T", depth_schedule=(12, 16, 20), theta_ray=(1, -1),
        theta_tmax=3.0,
    ))
    cyc = DiscreteGenerators((GroupElement([[2, 0], [0, Fraction(1, 2)]]),))
    out.append(CatalogEntry(
        "cyclic-hyperbolic", 2, cyc, None, None, None, "discrete: no weight data", False,
        "cyclic group generated by diag(2, 1/2)", depth_schedule=(64, 128, 256), theta_ray=(1, -1),
        theta_tmax=3.0,
    ))
    return tuple(out)


def catalog_entries() -> list:
    return list(_entries())


def catalog_entry(name: str) -> CatalogEntry:
    for e in _entries():
        if e.name == name:
            return e
    known = ", ".join(e.name for e in _entries())
    raise KeyError(f"unknown catalog entry {name!r}; known: {known}")
