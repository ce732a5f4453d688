"""Flatness test, atom extraction and conversion of atoms into product-state decompositions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la
from scipy.optimize import least_squares, nnls

from .moment_relaxation import TruncatedMomentSequence, moment_matrix
from .poly_algebra import VariableLayout, monomial_index, monomial_values
from .tensor_core import Decomposition, HermitianTensor, TensorError, rank_one, reconstruct, residual


class ExtractionError(RuntimeError):
    pass


def numerical_rank(singular_values: Sequence[float], rank_tol: float) -> int:
    sv = np.asarray(singular_values, dtype=float)
    if sv.size == 0 or sv.max() <= 0:
        return 0
    return int(np.sum(sv > rank_tol * sv.max()))


@dataclass(frozen=True)
class FlatWitness:
    t: int
    rank_r: int
    rank_tminus1: int
    singular_values: tuple[float, ...]
    tol: float

    @property
    def flat(self) -> bool:
        return self.rank_r == self.rank_tminus1 and self.rank_r > 0


@dataclass(frozen=True)
class AtomicMeasure:
    weights: np.ndarray
    points: np.ndarray
    # largest |h_j(x_i)| before the points were projected onto the spheres
    constraint_violation: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] != w.size:
            raise ValueError("one point per weight required")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.weights.size


def is_flat(y: TruncatedMomentSequence, t: int, rank_tol: float = 1e-6) -> FlatWitness:
    if t < 1:
        raise ValueError("flatness needs t >= 1")
    if 2 * t > y.degree:
        raise ValueError(f"t={t} needs moments of degree {2 * t}, sequence has {y.degree}")
    z = y.truncate(2 * t)
    sv_t = np.linalg.svd(moment_matrix(z, t), compute_uv=False)
    sv_prev = np.linalg.svd(moment_matrix(z, t - 1), compute_uv=False)
    return FlatWitness(t, numerical_rank(sv_t, rank_tol), numerical_rank(sv_prev, rank_tol), tuple(sv_t), rank_tol)


def _shift_rows(index, basis_rows: np.ndarray, j: int) -> np.ndarray:
    e = index.exponents[basis_rows].copy()
    e[:, j] += 1
    return np.array([index[tuple(a)] for a in e])


def extract_atoms(
    z: TruncatedMomentSequence,
    t: int,
    witness: FlatWitness,
    seed: int = 0,
    blocks: Sequence[np.ndarray] | None = None,
    max_retries: int = 5,
    ghost_tol: float = 1e-3,
) -> AtomicMeasure:
    """Atoms of the unique representing measure of a flat sequence.

    ``blocks`` lists the coordinate groups that live on unit spheres; each
    extracted point is renormalized blockwise.  Atoms whose fitted weight is
    non-positive but below ``ghost_tol`` times the mass are numerical rank
    artifacts and are dropped; a clearly negative weight is an error.
    """
    if not witness.flat:
        raise ExtractionError(f"sequence is not flat at t={witness.t}")
    z = z.truncate(2 * t)
    r = witness.rank_r
    nvars = z.nvars
    M = moment_matrix(z, t)
    w, V = np.linalg.eigh(M)
    order = np.argsort(w)[::-1][:r]
    if np.any(w[order] <= 0):
        raise ExtractionError("moment matrix has fewer positive eigenvalues than its rank")
    L = V[:, order] * np.sqrt(w[order])

    index = monomial_index(nvars, t)
    low = np.flatnonzero(index.degrees() <= t - 1)
    _, R, piv = la.qr(L[low].T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < r or diag[r - 1] <= 1e-10 * diag[0]:
        raise ExtractionError("degree t-1 monomials do not span the column space")
    basis = low[np.sort(piv[:r])]
    U = la.solve(L[basis].T, L.T).T  # U[basis] = I

    mats = [U[_shift_rows(index, basis, j)] for j in range(nvars)]
    rng = np.random.default_rng(seed)
    scale = max(np.abs(np.array(mats)).max(), 1.0)
    for _ in range(max_retries):
        c = rng.standard_normal(nvars)
        c /= np.linalg.norm(c)
        Nc = sum(cj * Nj for cj, Nj in zip(c, mats))
        T, Q = la.schur(Nc, output="real")
        ev = np.diag(T)
        sub = np.abs(np.diag(T, -1)) if r > 1 else np.zeros(0)
        gaps = np.abs(ev[:, None] - ev[None, :])
        np.fill_diagonal(gaps, np.inf)
        if np.all(sub <= 1e-8 * scale) and (r == 1 or gaps.min() > 1e-6 * scale):
            break
    else:
        raise ExtractionError("multiplication matrices have clustered eigenvalues")
    pts = np.array([[Q[:, i] @ Nj @ Q[:, i] for Nj in mats] for i in range(r)])

    full = monomial_index(nvars, 2 * t)
    Vand = monomial_values(full.exponents, pts).T
    lam, *_ = la.lstsq(Vand, z.values)
    violation = 0.0
    if blocks is not None:
        for blk in blocks:
            norms = np.linalg.norm(pts[:, blk], axis=1)
            violation = max(violation, float(np.abs(norms**2 - 1).max()))
            pts[:, blk] /= norms[:, None]
    floor = ghost_tol * abs(z.mass)
    if np.any(lam < -floor):
        raise ExtractionError(f"extracted weights are not positive: {lam}")
    keep = lam > 0
    if not keep.any():
        raise ExtractionError("no extracted atom has positive weight")
    return AtomicMeasure(lam[keep], pts[keep], violation)


def _gauge(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size == 0:
        return v
    a = v[nz[0]]
    return v * (abs(a) / a)


def atoms_to_decomposition(mu: AtomicMeasure, layout: VariableLayout, H: HermitianTensor) -> Decomposition:
    """Product states from atom coordinates, with weights refitted to ``H`` by NNLS."""
    if mu.points.shape[1] != layout.nvars:
        raise TensorError(f"points have {mu.points.shape[1]} coordinates, layout needs {layout.nvars}")
    symmetric = layout.mode == "symmetric"
    atoms = []
    for x in mu.points:
        vecs = [_gauge(v / np.linalg.norm(v)) for v in layout.vectors(x)]
        atoms.append(tuple(vecs[:1]) if symmetric else tuple(vecs))
    return _refit(atoms, symmetric, H)


def _refit(atoms, symmetric: bool, H: HermitianTensor) -> Decomposition:
    """NNLS weights for fixed atoms; atoms fitted to zero are dropped."""
    m = H.dims.m
    cols = []
    for atom in atoms:
        parties = tuple(atom) * m if symmetric else tuple(atom)
        T = rank_one(parties).ravel()
        cols.append(np.concatenate([T.real, T.imag]))
    target = np.concatenate([H.data.ravel().real, H.data.ravel().imag])
    weights, _ = nnls(np.array(cols).T, target)
    keep = weights > 0
    if not keep.any():
        raise ExtractionError("no atom keeps a positive weight after refitting")
    d = Decomposition(symmetric, weights[keep], tuple(a for a, k in zip(atoms, keep) if k))
    return Decomposition(d.symmetric, d.weights, d.vectors, residual(H, reconstruct(d, H.dims)))


def prune_decomposition(
    dec: Decomposition,
    H: HermitianTensor,
    residual_tol: float,
    weight_tol: float = 1e-3,
    refine: bool = True,
) -> Decomposition:
    """Drop atoms carrying less than ``weight_tol`` of the total weight.

    A moment matrix whose numerical rank is inflated by one tiny singular
    value yields a ghost atom next to a genuine one.  Each removal is kept
    only if the refitted (and optionally polished) remainder still matches
    ``H`` within ``residual_tol``.
    """
    while dec.rank > 1:
        i = int(np.argmin(dec.weights))
        if dec.weights[i] > weight_tol * dec.weights.sum():
            break
        try:
            cand = _refit([a for j, a in enumerate(dec.vectors) if j != i], dec.symmetric, H)
        except ExtractionError:
            break
        if cand.residual > residual_tol and refine:
            cand = refine_decomposition(cand, H)
        if cand.residual > residual_tol or cand.rank >= dec.rank:
            break
        dec = cand
    return dec


def refine_decomposition(dec: Decomposition, H: HermitianTensor, max_nfev: int = 200) -> Decomposition:
    """Gauss-Newton polish of weights and vectors against ``H``.

    Extraction from a moment vector that is only approximately flat lands
    close to a decomposition; a few least-squares steps on the product-state
    parametrization close the gap. The atom count never grows.
    """
    dims = H.dims
    m = dims.m
    nvec = 1 if dec.symmetric else m
    sizes = [dims.dims[0]] * nvec if dec.symmetric else list(dims.dims)
    r = len(dec.weights)
    D = dims.total
    target = H.matrix()
    tri = np.triu_indices(D)

    def unpack(p):
        s = p[:r]
        rest = p[r:]
        atoms = []
        pos = 0
        for _ in range(r):
            vecs = []
            for n in sizes:
                vecs.append(rest[pos : pos + n] + 1j * rest[pos + n : pos + 2 * n])
                pos += 2 * n
            atoms.append(vecs)
        return s, atoms

    def kets(atoms):
        out = []
        for vecs in atoms:
            ket = np.ones(1, dtype=complex)
            for v in vecs * m if dec.symmetric else vecs:
                ket = np.kron(ket, v)
            out.append(ket)
        return np.array(out)

    def fun(p):
        s, atoms = unpack(p)
        K = kets(atoms)
        diff = (K.T * s**2) @ K.conj() - target
        # the strict upper triangle counts twice in the Frobenius norm
        scale = np.where(tri[0] == tri[1], 1.0, np.sqrt(2.0))
        e = diff[tri] * scale
        return np.concatenate([e.real, e.imag])

    x0 = [np.sqrt(dec.weights)]
    for vecs in dec.vectors:
        for v in vecs:
            x0 += [v.real, v.imag]
    x0 = np.concatenate(x0)
    # lm needs at least as many residuals as unknowns
    method = "lm" if D * D >= x0.size else "trf"
    sol = least_squares(fun, x0, method=method, max_nfev=max_nfev * (x0.size + 1), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    s, atoms = unpack(sol.x)
    weights = s**2
    vectors = []
    for i, vecs in enumerate(atoms):
        norms = [np.linalg.norm(v) for v in vecs]
        if min(norms) == 0:
            weights[i] = 0.0
            vectors.append(dec.vectors[i])
            continue
        weights[i] *= np.prod(norms) ** (2 * m if dec.symmetric else 2)
        vectors.append(tuple(_gauge(v / nv) for v, nv in zip(vecs, norms)))
    keep = weights > 0
    out = Decomposition(dec.symmetric, weights[keep], tuple(v for v, k in zip(vectors, keep) if k))
    return Decomposition(out.symmetric, out.weights, out.vectors, residual(H, reconstruct(out, dims)))
