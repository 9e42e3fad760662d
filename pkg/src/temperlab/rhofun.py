"""rho-functions: half the sum of |Re eigenvalue| of a Lie algebra action."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from temperlab.matgroup import sl_basis, structure_action
from temperlab.numbers import rationalize
from temperlab.rootdata import Weight, WeightSystem


class SpectrumError(ValueError):
    """Cartan family is not commuting or not split over R."""


@dataclass(frozen=True)
class RhoFunction:
    system: WeightSystem

    @property
    def dim(self) -> int:
        return self.system.dim

    def __call__(self, x):
        return rho_eval(self, x)


def _as_system(f) -> WeightSystem:
    return f.system if isinstance(f, RhoFunction) else f


def rho_eval(f, x):
    """1/2 sum m_i |lambda_i(x)|; exact when both weights and x are rational."""
    ws = _as_system(f)
    x = tuple(x)
    if len(x) != ws.dim:
        raise ValueError(f"point of dimension {len(x)} for a rho-function on R^{ws.dim}")
    if ws.exact and all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in x):
        total = Fraction(0)
        for w in ws.weights:
            total += w.multiplicity * abs(sum(c * v for c, v in zip(w.covector, x)))
        return total / 2
    if not ws.weights:
        return 0.0
    vals = ws.covector_matrix() @ np.asarray(x, dtype=float)
    return 0.5 * float(ws.multiplicities() @ np.abs(vals))


def rho_eval_batch(f, points: np.ndarray) -> np.ndarray:
    """Float evaluation at a stack of points of shape (m, dim)."""
    ws = _as_system(f)
    points = np.asarray(points, dtype=float)
    if not ws.weights:
        return np.zeros(points.shape[:-1])
    return 0.5 * np.abs(points @ ws.covector_matrix().T) @ ws.multiplicities()


def rho_of_matrix(m) -> float:
    """1/2 sum |Re lambda| over the complex spectrum of a square matrix."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("rho_of_matrix needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite matrix entries")
    try:
        ev = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigenvalue solver failed: {exc}") from exc
    return 0.5 * float(np.sum(np.abs(ev.real)))


def lipschitz_bound(f) -> float:
    """1/2 sum m_i ||lambda_i||_2: a global Lipschitz constant for the Euclidean norm."""
    ws = _as_system(f)
    if not ws.weights:
        return 0.0
    return 0.5 * float(ws.multiplicities() @ np.linalg.norm(ws.covector_matrix(), axis=1))


def _joint_eigenspaces(ads: list, rng: np.random.Generator, attempts: int = 8):
    """Split R^N into joint eigenspaces of a commuting, split family."""
    size = ads[0].shape[0]
    for _ in range(attempts):
        coeffs = [Fraction(int(c), 97) for c in rng.integers(1, 97 * 8, size=len(ads))]
        comb = sum(float(c) * a for c, a in zip(coeffs, ads))
        vals, vecs = np.linalg.eig(comb)
        if np.max(np.abs(vals.imag), initial=0.0) > 1e-7:
            raise SpectrumError("joint spectrum is not real")
        vals = vals.real
        order = np.argsort(vals)
        clusters = []
        for idx in order:
            if clusters and abs(vals[idx] - vals[clusters[-1][-1]]) < 1e-7:
                clusters[-1].append(idx)
            else:
                clusters.append([idx])
        gaps = np.diff(sorted(vals[c[0]] for c in clusters))
        if len(gaps) and np.min(gaps) < 1e-6:
            continue
        spaces = []
        ok = True
        for c in clusters:
            v = np.real_if_close(vecs[:, c])
            if np.iscomplexobj(v):
                v = np.concatenate([v.real, v.imag], axis=1)
            # orthonormal basis of the span
            u, s, _ = np.linalg.svd(v, full_matrices=False)
            basis = u[:, s > 1e-9 * s[0]]
            if basis.shape[1] != len(c):
                ok = False
                break
            eig = []
            for a in ads:
                img = a @ basis
                lam = np.trace(basis.T @ img) / basis.shape[1]
                if np.max(np.abs(img - lam * basis)) > 1e-6 * max(1.0, np.max(np.abs(a))):
                    ok = False
                    break
                eig.append(lam)
            if not ok:
                break
            spaces.append((tuple(eig), len(c)))
        if ok:
            return spaces
    raise SpectrumError("could not separate joint eigenspaces; family may not be diagonalizable")


def adjoint_weight_system(
    h_basis: Sequence[np.ndarray],
    cartan_basis: Sequence[np.ndarray],
    on_space: str = "self",
    seed: int = 0,
) -> WeightSystem:
    """Joint weights of ad(cartan_basis) on span(h_basis) or on all of sl(n).

    Covectors are expressed in cartan_basis coordinates.  Values within
    1e-9 of a fraction with denominator <= 64 are made exact; anything
    else stays floating and the system reports ``exact == False``.
    """
    if on_space not in ("self", "ambient"):
        raise ValueError("on_space must be 'self' or 'ambient'")
    h_basis = [np.asarray(b, dtype=float) for b in h_basis]
    cartan_basis = [np.asarray(c, dtype=float) for c in cartan_basis]
    if on_space == "ambient":
        if not (h_basis or cartan_basis):
            raise ValueError("ambient action needs a matrix size")
        n = (h_basis or cartan_basis)[0].shape[0]
        space = sl_basis(n)
    else:
        space = h_basis
    dim_space = len(space)
    d = len(cartan_basis)
    if d == 0 or dim_space == 0:
        return WeightSystem(d, (), zero_multiplicity=dim_space)
    for i, a in enumerate(cartan_basis):
        for b in cartan_basis[i + 1:]:
            if np.max(np.abs(a @ b - b @ a)) > 1e-9:
                raise SpectrumError("Cartan basis is not commuting")
    ads = [structure_action(space, c) for c in cartan_basis]
    spaces = _joint_eigenspaces(ads, np.random.default_rng(seed))
    weights = []
    zero = 0
    for eig, mult in spaces:
        cov = []
        for x in eig:
            q = rationalize(float(x))
            cov.append(q if q is not None else float(x))
        if all(c == 0 for c in cov):
            zero += mult
        else:
            weights.append(Weight(tuple(cov), mult))
    return WeightSystem(d, tuple(weights), zero_multiplicity=zero)
