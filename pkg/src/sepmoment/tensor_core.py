"""Hermitian tensors of multipartite mixed states.

Half-subscripts ``I = (i_1, ..., i_m)`` are 1-based.  A tensor with party
dimensions ``(n_1, ..., n_m)`` is stored densely as a complex array of shape
``(n_1, ..., n_m, n_1, ..., n_m)``; flattening a half-subscript is
lexicographic with party 1 slowest, which matches the row order of the
density matrix ``rho`` in the computational product basis.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10


class TensorError(ValueError):
    """Invalid tensor, ensemble or decomposition data."""


class NotHermitianError(TensorError):
    def __init__(self, max_asymmetry: float):
        super().__init__(f"matrix is not Hermitian (max |A - A^H| = {max_asymmetry:.3e})")
        self.max_asymmetry = max_asymmetry


@dataclass(frozen=True)
class PartyDims:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or min(dims) < 1:
            raise TensorError(f"party dimensions must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        """Sum of the local dimensions."""
        return sum(self.dims)

    @property
    def total(self) -> int:
        """Dimension of the joint Hilbert space."""
        return prod(self.dims)

    def offset(self, i: int) -> int:
        return 2 * sum(self.dims[:i])

    @property
    def equal(self) -> bool:
        return len(set(self.dims)) == 1

    def half_subscripts(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(1, d + 1) for d in self.dims)))

    def flat(self, I: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(i - 1 for i in I), self.dims))


def as_dims(dims: PartyDims | Sequence[int]) -> PartyDims:
    return dims if isinstance(dims, PartyDims) else PartyDims(tuple(dims))


@dataclass(frozen=True)
class HermitianTensor:
    dims: PartyDims
    data: np.ndarray

    def __post_init__(self):
        dims = as_dims(self.dims)
        data = np.asarray(self.data, dtype=complex)
        if data.shape != dims.dims * 2:
            raise TensorError(f"tensor shape {data.shape} does not match dims {dims.dims}")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, dims: PartyDims | Sequence[int]) -> HermitianTensor:
        dims = as_dims(dims)
        return cls(dims, np.asarray(matrix, dtype=complex).reshape(dims.dims * 2))

    def matrix(self) -> np.ndarray:
        D = self.dims.total
        return self.data.reshape(D, D)

    def entry(self, I: Sequence[int], J: Sequence[int]) -> complex:
        return complex(self.data[tuple(i - 1 for i in I) + tuple(j - 1 for j in J)])

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix()).real)

    def scaled(self, factor: float) -> HermitianTensor:
        return HermitianTensor(self.dims, self.data * factor)


@dataclass(frozen=True)
class StateEnsemble:
    """Pure-state mixture ``sum_i p_i |psi_i><psi_i|`` given by amplitude tensors."""

    dims: PartyDims
    terms: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        dims = as_dims(self.dims)
        terms = []
        for i, (p, amp) in enumerate(self.terms):
            amp = np.asarray(amp, dtype=complex)
            if amp.size != dims.total:
                raise TensorError(f"term {i}: amplitude size {amp.size} != {dims.total}")
            amp = amp.reshape(dims.dims)
            if not p > 0:
                raise TensorError(f"term {i}: weight must be positive, got {p}")
            norm = np.linalg.norm(amp)
            if abs(norm - 1.0) > 1e-10:
                raise TensorError(f"term {i}: amplitudes have norm {norm:.12g}, expected 1")
            terms.append((float(p), amp))
        total = sum(p for p, _ in terms)
        if abs(total - 1.0) > 1e-10:
            raise TensorError(f"weights sum to {total:.12g}, expected 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "terms", tuple(terms))


@dataclass(frozen=True)
class Decomposition:
    """Positive product-state decomposition.

    ``vectors[i]`` holds the party vectors of atom ``i``; in symmetric mode it
    holds a single vector that is repeated over all parties.
    """

    symmetric: bool
    weights: np.ndarray
    vectors: tuple[tuple[np.ndarray, ...], ...]
    residual: float | None = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        vectors = tuple(tuple(np.asarray(v, dtype=complex).reshape(-1) for v in atom) for atom in self.vectors)
        if len(vectors) != len(weights):
            raise TensorError("one vector tuple per weight required")
        if np.any(weights <= 0):
            raise TensorError("decomposition weights must be positive")
        for atom in vectors:
            if self.symmetric and len(atom) != 1:
                raise TensorError("symmetric atoms carry exactly one vector")
            for v in atom:
                if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                    raise TensorError(f"atom vector has norm {np.linalg.norm(v):.3e}, expected 1")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "vectors", vectors)

    @property
    def rank(self) -> int:
        return len(self.weights)

    def party_vectors(self, i: int, m: int) -> tuple[np.ndarray, ...]:
        atom = self.vectors[i]
        return atom * m if self.symmetric else atom


@dataclass(frozen=True)
class StructureReport:
    hermitian: bool
    symmetric: bool
    trace: float
    max_asymmetry: float = field(default=0.0)
    max_permutation_defect: float = field(default=0.0)


def ensemble_to_tensor(e: StateEnsemble) -> HermitianTensor:
    out = np.zeros(e.dims.dims * 2, dtype=complex)
    for p, amp in e.terms:
        out += p * np.multiply.outer(amp, amp.conj())
    return HermitianTensor(e.dims, out)


def density_to_tensor(matrix: np.ndarray, dims: PartyDims | Sequence[int]) -> HermitianTensor:
    dims = as_dims(dims)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (dims.total, dims.total):
        raise TensorError(f"density matrix shape {matrix.shape} != ({dims.total}, {dims.total})")
    asym = float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0))
    if asym > HERMITIAN_TOL:
        raise NotHermitianError(asym)
    return HermitianTensor.from_matrix(matrix, dims)


def _party_permutations(m: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(m)))


def _permute(data: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    m = len(perm)
    return np.transpose(data, tuple(perm) + tuple(m + p for p in perm))


def check_structure(H: HermitianTensor, tol: float = 1e-12) -> StructureReport:
    M = H.matrix()
    asym = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    defect = np.inf
    if H.dims.equal:
        defect = max((float(np.max(np.abs(_permute(H.data, p) - H.data))) for p in _party_permutations(H.dims.m)), default=0.0)
    return StructureReport(
        hermitian=asym <= tol,
        symmetric=bool(defect <= tol),
        trace=float(np.trace(M).real),
        max_asymmetry=asym,
        max_permutation_defect=float(defect),
    )


def symmetrize(H: HermitianTensor) -> HermitianTensor:
    """Average entries over simultaneous party permutations of I and J."""
    if not H.dims.equal:
        raise TensorError("symmetrization needs equal party dimensions")
    perms = _party_permutations(H.dims.m)
    data = sum(_permute(H.data, p) for p in perms) / len(perms)
    return HermitianTensor(H.dims, data)


def hermitize(H: HermitianTensor) -> HermitianTensor:
    M = H.matrix()
    return HermitianTensor.from_matrix((M + M.conj().T) / 2, H.dims)


def normalize_trace(H: HermitianTensor, rescale: bool = False) -> HermitianTensor:
    tr = H.trace
    if abs(tr - 1.0) > 1e-9:
        warnings.warn(f"tensor trace is {tr:.6g}, not 1", stacklevel=2)
        if rescale:
            return H.scaled(1.0 / tr)
    return H


def _orbit(I: tuple[int, ...], J: tuple[int, ...], symmetric: bool):
    perms = _party_permutations(len(I)) if symmetric else [tuple(range(len(I)))]
    for p in perms:
        pI, pJ = tuple(I[k] for k in p), tuple(J[k] for k in p)
        yield pI, pJ, False
        yield pJ, pI, True


def canonical_pair(I: Sequence[int], J: Sequence[int], symmetric: bool = False) -> tuple[tuple[int, ...], tuple[int, ...], bool]:
    """Smallest pair in the symmetry orbit of ``(I, J)``.

    The orbit is generated by the conjugate swap ``(I, J) -> (J, I)`` and, in
    symmetric mode, by simultaneous party permutations of I and J.  Returns
    ``(I', J', conjugated)`` with ``H[I, J] == H[I', J']`` (conjugated when
    the flag is set).
    """
    best = min(_orbit(tuple(I), tuple(J), symmetric), key=lambda t: (t[0], t[1], t[2]))
    return best


def reduced_index_pairs(dims: PartyDims | Sequence[int], symmetric: bool = False) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """One representative ``(I, J)`` per symmetry orbit, in lexicographic order.

    Every representative has ``I <= J``; in symmetric mode ``I`` is also
    non-decreasing.  ``J`` is not sorted: only simultaneous permutations of I
    and J leave the tensor invariant.
    """
    dims = as_dims(dims)
    if symmetric and not dims.equal:
        raise TensorError("symmetric index reduction requires equal party dimensions")
    subs = dims.half_subscripts()
    reps = {canonical_pair(I, J, symmetric)[:2] for I in subs for J in subs}
    return sorted(reps)


def rank_one(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """``u1 x ... x um x conj(u1) x ... x conj(um)`` as a dense array."""
    ket = vectors[0]
    for v in vectors[1:]:
        ket = np.multiply.outer(ket, v)
    return np.multiply.outer(ket, np.conj(ket))


def reconstruct(d: Decomposition, dims: PartyDims | Sequence[int]) -> HermitianTensor:
    dims = as_dims(dims)
    if d.symmetric and not dims.equal:
        raise TensorError("symmetric decomposition needs equal party dimensions")
    out = np.zeros(dims.dims * 2, dtype=complex)
    for i, lam in enumerate(d.weights):
        vecs = d.party_vectors(i, dims.m)
        if len(vecs) != dims.m or any(len(v) != n for v, n in zip(vecs, dims.dims)):
            raise TensorError(f"atom {i} vector lengths do not match dims {dims.dims}")
        out += lam * rank_one(vecs)
    return HermitianTensor(dims, out)


def residual(A: HermitianTensor, B: HermitianTensor) -> float:
    if A.dims != B.dims:
        raise TensorError(f"dims mismatch: {A.dims.dims} vs {B.dims.dims}")
    return float(np.linalg.norm((A.data - B.data).ravel()))


def product_state(vectors: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, np.asarray(v, dtype=complex))
    return out
