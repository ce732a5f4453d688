"""Moment matrices, localizing matrices and the level-k semidefinite relaxation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from .poly_algebra import (
    MonomialIndex,
    Polynomial,
    VariableLayout,
    expand_pij,
    monomial_index,
    monomial_values,
    sphere_constraints,
)
from .tensor_core import HermitianTensor, TensorError, check_structure, reduced_index_pairs


@dataclass(frozen=True)
class TruncatedMomentSequence:
    nvars: int
    degree: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        expected = len(monomial_index(self.nvars, self.degree))
        if values.shape != (expected,):
            raise ValueError(f"expected {expected} moments for nvars={self.nvars}, degree={self.degree}, got {values.size}")
        object.__setattr__(self, "values", values)

    @property
    def index(self) -> MonomialIndex:
        return monomial_index(self.nvars, self.degree)

    @property
    def mass(self) -> float:
        return float(self.values[0])

    def __getitem__(self, alpha) -> float:
        return float(self.values[self.index[tuple(alpha)]])

    def truncate(self, degree: int) -> TruncatedMomentSequence:
        if degree > self.degree:
            raise ValueError(f"cannot truncate degree {self.degree} sequence to {degree}")
        count = len(monomial_index(self.nvars, degree))
        # graded order puts all lower-degree monomials first
        return TruncatedMomentSequence(self.nvars, degree, self.values[:count])

    @classmethod
    def from_measure(cls, points, weights, degree: int) -> TruncatedMomentSequence:
        """Moments of the atomic measure ``sum_i weights[i] * delta(points[i])``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        idx = monomial_index(points.shape[1], degree)
        vals = weights @ monomial_values(idx.exponents, points)
        return cls(points.shape[1], degree, vals)


@dataclass(frozen=True)
class SymbolicMatrix:
    """Symmetric matrix whose cells are linear forms in the moments.

    Stored as COO quadruples ``(row, col, moment index, coefficient)``
    covering every nonzero cell (both triangles).
    """

    size: int
    labels: tuple
    rows: np.ndarray
    cols: np.ndarray
    moments: np.ndarray
    coefs: np.ndarray

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros((self.size, self.size))
        np.add.at(out, (self.rows, self.cols), self.coefs * y[self.moments])
        return out

    def operator(self, num_moments: int) -> sp.csr_matrix:
        """Sparse map ``y -> vec(matrix)`` (row-major), shape ``(size**2, num_moments)``."""
        return sp.csr_matrix(
            (self.coefs, (self.rows * self.size + self.cols, self.moments)),
            shape=(self.size * self.size, num_moments),
        )

    def adjoint(self, X: np.ndarray, num_moments: int) -> np.ndarray:
        """``y -> <matrix(y), X>`` as a vector over the moments."""
        X = np.asarray(X, dtype=float)
        return np.bincount(self.moments, weights=self.coefs * X[self.rows, self.cols], minlength=num_moments)

    @property
    def max_moment(self) -> int:
        return int(self.moments.max(initial=-1))


@lru_cache(maxsize=64)
def moment_matrix_symbolic(nvars: int, k: int) -> SymbolicMatrix:
    half = monomial_index(nvars, k)
    full = monomial_index(nvars, 2 * k)
    e = half.exponents
    s = len(half)
    pos = np.array([full[tuple(a)] for a in (e[:, None, :] + e[None, :, :]).reshape(-1, nvars)])
    rows, cols = np.divmod(np.arange(s * s), s)
    return SymbolicMatrix(s, half.monomials, rows, cols, pos, np.ones(s * s))


def localizing_symbolic(h: Polynomial, k: int) -> SymbolicMatrix:
    nvars = h.nvars
    order = k - ceil(h.degree / 2)
    if order < 0:
        raise ValueError(f"localizing order k={k} too small for a degree {h.degree} polynomial")
    half = monomial_index(nvars, order)
    full = monomial_index(nvars, 2 * k)
    s = len(half)
    e = half.exponents
    rows, cols, mom, coef = [], [], [], []
    base_r, base_c = np.divmod(np.arange(s * s), s)
    sums = (e[:, None, :] + e[None, :, :]).reshape(-1, nvars)
    for alpha, c in h.terms.items():
        shifted = sums + np.asarray(alpha)
        rows.append(base_r)
        cols.append(base_c)
        mom.append(np.array([full[tuple(a)] for a in shifted]))
        coef.append(np.full(s * s, c))
    return SymbolicMatrix(s, half.monomials, np.concatenate(rows), np.concatenate(cols), np.concatenate(mom), np.concatenate(coef))


def coefficient_vector(p: Polynomial, index: MonomialIndex) -> np.ndarray:
    out = np.zeros(len(index))
    for alpha, c in p.terms.items():
        if alpha not in index:
            raise ValueError(f"monomial {alpha} exceeds degree {index.degree}")
        out[index[alpha]] = c
    return out


def riesz(p: Polynomial, y: TruncatedMomentSequence) -> float:
    """``sum_alpha p_alpha y_alpha``."""
    if p.nvars != y.nvars:
        raise ValueError("variable count mismatch")
    if p.degree > y.degree:
        raise ValueError(f"polynomial degree {p.degree} exceeds sequence degree {y.degree}")
    return float(coefficient_vector(p, y.index) @ y.values)


def moment_matrix(y: TruncatedMomentSequence, k: int) -> np.ndarray:
    if 2 * k > y.degree:
        raise ValueError(f"moment matrix of order {k} needs degree {2 * k}, sequence has {y.degree}")
    sym = moment_matrix_symbolic(y.nvars, k)
    full = y.values if y.degree == 2 * k else y.truncate(2 * k).values
    return full[sym.moments].reshape(sym.size, sym.size)


def localizing_matrix(h: Polynomial, y: TruncatedMomentSequence, k: int) -> np.ndarray:
    if 2 * k > y.degree:
        raise ValueError(f"localizing matrix of order {k} needs degree {2 * k}, sequence has {y.degree}")
    return localizing_symbolic(h, k).evaluate(y.truncate(2 * k).values)


# --- relaxation assembly -----------------------------------------------------


@dataclass
class SdpProblem:
    """Find moments ``y`` minimizing ``c @ y`` with ``A y = b``, PSD blocks and zero blocks.

    ``moment_bound`` is an a priori bound on ``max |y_alpha|`` over the
    feasible set; the infeasibility verifier uses it to absorb residuals.
    ``pivot_order`` lists moment indices from most to least preferred when
    the solver eliminates zero-block equalities.
    """

    num_moments: int
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    psd_blocks: list[SymbolicMatrix]
    zero_blocks: list[SymbolicMatrix] = field(default_factory=list)
    moment_bound: float | None = None
    pivot_order: np.ndarray | None = None
    row_labels: list = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.A = sp.csr_matrix(self.A, dtype=float)
        if self.c.shape != (self.num_moments,):
            raise ValueError("objective length must equal num_moments")
        if self.A.shape != (len(self.b), self.num_moments):
            raise ValueError(f"A has shape {self.A.shape}, expected ({len(self.b)}, {self.num_moments})")
        if self.A.shape[0] and np.any(np.diff(self.A.indptr) == 0):
            raise ValueError("equality system contains an empty row")
        for blk in [*self.psd_blocks, *self.zero_blocks]:
            if blk.max_moment >= self.num_moments:
                raise ValueError("block references a moment index beyond num_moments")

    @property
    def sizes(self) -> dict[str, Any]:
        return {
            "num_moments": self.num_moments,
            "equalities": int(self.A.shape[0]),
            "psd_blocks": [blk.size for blk in self.psd_blocks],
            "zero_blocks": [blk.size for blk in self.zero_blocks],
        }


def assemble_sdp(H: HermitianTensor, mode: str, k: int, F: Polynomial, structure_tol: float = 1e-9) -> SdpProblem:
    """Level-``k`` relaxation of the product-measure matching problem for ``H``."""
    dims = H.dims
    symmetric = mode == "symmetric"
    if mode not in ("symmetric", "partitioned"):
        raise ValueError(f"unknown mode {mode!r}")
    if symmetric and not check_structure(H, structure_tol).symmetric:
        raise TensorError("symmetric mode requires a symmetric Hermitian tensor")
    layout = VariableLayout(mode, dims.dims)
    nvars = layout.nvars
    if F.nvars != nvars:
        raise ValueError(f"objective has {F.nvars} variables, layout needs {nvars}")
    if 2 * k < max(F.degree, 2 * dims.m):
        raise ValueError(f"level k={k} too low: need 2k >= max(deg F, 2m) = {max(F.degree, 2 * dims.m)}")

    index = monomial_index(nvars, 2 * k)
    N = len(index)
    data, indices, indptr, b, labels = [], [], [0], [], []

    def add_row(poly: Polynomial, rhs: float, label) -> None:
        vec = coefficient_vector(poly, index)
        nz = np.flatnonzero(vec)
        data.extend(vec[nz])
        indices.extend(nz)
        indptr.append(len(indices))
        b.append(rhs)
        labels.append(label)

    for I, J in reduced_index_pairs(dims, symmetric):
        R, T = expand_pij(layout, I, J)
        value = H.entry(I, J)
        add_row(R, value.real, (I, J, "re"))
        if not T.is_zero():
            add_row(T, value.imag, (I, J, "im"))
        elif abs(value.imag) > structure_tol:
            raise TensorError(f"entry {I},{J} must be real for this structure, got {value}")

    A = sp.csr_matrix((data, indices, indptr), shape=(len(b), N))
    degrees = index.degrees()
    # prefer eliminating high-degree moments, earliest monomial first within a degree
    pivot_order = np.lexsort((np.arange(N), -degrees))
    return SdpProblem(
        num_moments=N,
        c=coefficient_vector(F, index),
        A=A,
        b=np.array(b),
        psd_blocks=[moment_matrix_symbolic(nvars, k)],
        zero_blocks=[localizing_symbolic(h, k) for h in sphere_constraints(layout)],
        # feasible moments satisfy |y_alpha| <= y_0 = trace(H) on the product of spheres
        moment_bound=abs(H.trace),
        pivot_order=pivot_order,
        row_labels=labels,
        meta={"mode": mode, "k": k, "nvars": nvars, "dims": dims.dims},
    )


def write_sdp_dump(problem: SdpProblem, path: str | Path) -> None:
    """Text dump: one ``kind block row col moment coef`` line per nonzero.

    ``kind`` is ``psd`` or ``zero`` for matrix blocks, ``eq`` for equality rows
    (block = -1, col = -1) and ``rhs``/``obj`` for the vectors.
    """
    lines = [f"# num_moments {problem.num_moments}"]
    for kind, blocks in (("psd", problem.psd_blocks), ("zero", problem.zero_blocks)):
        for bi, blk in enumerate(blocks):
            for r, c, a, v in zip(blk.rows, blk.cols, blk.moments, blk.coefs):
                lines.append(f"{kind} {bi} {r} {c} {a} {v!r}")
    A = problem.A.tocoo()
    for r, a, v in zip(A.row, A.col, A.data):
        lines.append(f"eq -1 {r} -1 {a} {v!r}")
    for r, v in enumerate(problem.b):
        lines.append(f"rhs -1 {r} -1 -1 {v!r}")
    for a in np.flatnonzero(problem.c):
        lines.append(f"obj -1 -1 -1 {a} {problem.c[a]!r}")
    Path(path).write_text("\n".join(lines) + "\n")
