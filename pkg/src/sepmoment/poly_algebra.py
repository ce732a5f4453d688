"""Sparse real polynomials over the real coordinates of complex state vectors.

A complex vector ``u`` of length ``n`` is encoded by ``2n`` real variables.  In
symmetric mode the layout is ``x = (Re u, Im u)``; in partitioned mode every
party ``k`` owns a contiguous block ``(Re u^(k), Im u^(k))`` of length
``2 n_k``.  Monomials are exponent tuples and are ordered by total degree,
then lexicographically with variable 1 most significant (so ``x1`` precedes
``x2`` and ``x1^2`` precedes ``x1 x2``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]

PRUNE_TOL = 1e-15


def _prune(terms: dict[Monomial, float]) -> dict[Monomial, float]:
    return {a: c for a, c in terms.items() if abs(c) > PRUNE_TOL}


class Polynomial:
    """Real polynomial stored as a map from exponent tuples to coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, float] | None = None):
        self.nvars = int(nvars)
        clean: dict[Monomial, float] = {}
        for alpha, coef in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.nvars or min(alpha, default=0) < 0:
                raise ValueError(f"exponent {alpha} invalid for {self.nvars} variables")
            clean[alpha] = clean.get(alpha, 0.0) + float(coef)
        self.terms = _prune(clean)

    @classmethod
    def constant(cls, nvars: int, value: float) -> Polynomial:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, j: int) -> Polynomial:
        """The coordinate ``x_{j+1}`` (``j`` is 0-based)."""
        alpha = [0] * nvars
        alpha[j] = 1
        return cls(nvars, {tuple(alpha): 1.0})

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: Polynomial) -> None:
        if other.nvars != self.nvars:
            raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other: Polynomial | float) -> Polynomial:
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0.0) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(self.nvars, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other: Polynomial | float) -> Polynomial:
        return self + (-other)

    def __rsub__(self, other: float) -> Polynomial:
        return (-self) + other

    def __mul__(self, other: Polynomial | float) -> Polynomial:
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {a: c * other for a, c in self.terms.items()})
        self._check(other)
        out: dict[Monomial, float] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                key = tuple(i + j for i, j in zip(a, b))
                out[key] = out.get(key, 0.0) + ca * cb
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> Polynomial:
        out = Polynomial.constant(self.nvars, 1.0)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def allclose(self, other: Polynomial, tol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(a, 0.0) - other.terms.get(a, 0.0)) <= tol for a in keys)

    def __call__(self, x: Sequence[float]) -> float:
        return evaluate(self, x)

    def __repr__(self) -> str:
        return f"Polynomial(nvars={self.nvars}, nterms={len(self.terms)})"

    def __str__(self) -> str:
        return "\n".join(format_term(a, c) for a, c in sorted_terms(self))


def sorted_terms(p: Polynomial) -> list[tuple[Monomial, float]]:
    return sorted(p.terms.items(), key=lambda item: monomial_key(item[0]))


def format_term(alpha: Monomial, coef: float) -> str:
    """Debug line ``coeff * x1^a1 x3^a3``; the constant term prints ``coeff * 1``."""
    factors = [f"x{j + 1}^{a}" for j, a in enumerate(alpha) if a]
    return f"{coef!r} * {' '.join(factors) if factors else '1'}"


def monomial_key(alpha: Monomial) -> tuple:
    """Sort key implementing the graded order used for moment indexing."""
    return (sum(alpha), tuple(-a for a in alpha))


@lru_cache(maxsize=None)
def _basis(nvars: int, d: int) -> tuple[Monomial, ...]:
    out: list[Monomial] = []
    for deg in range(d + 1):
        # combinations of variable indices come out in lex order, which maps to
        # exponents in decreasing lex order (x1 first)
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for j in combo:
                alpha[j] += 1
            out.append(tuple(alpha))
    return tuple(out)


def monomial_basis(nvars: int, d: int) -> list[Monomial]:
    """All exponents of total degree <= d in graded order; length C(nvars+d, d)."""
    if nvars < 1 or d < 0:
        raise ValueError("need nvars >= 1 and d >= 0")
    return list(_basis(nvars, d))


class MonomialIndex:
    """Position lookup for ``monomial_basis(nvars, d)``."""

    def __init__(self, nvars: int, d: int):
        self.nvars = nvars
        self.degree = d
        self.monomials = _basis(nvars, d)
        self._pos = {a: i for i, a in enumerate(self.monomials)}
        self.exponents = np.array(self.monomials, dtype=np.int64).reshape(len(self.monomials), nvars)

    def __len__(self) -> int:
        return len(self.monomials)

    def __getitem__(self, alpha: Monomial) -> int:
        return self._pos[tuple(alpha)]

    def __contains__(self, alpha: Monomial) -> bool:
        return tuple(alpha) in self._pos

    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)


@lru_cache(maxsize=None)
def monomial_index(nvars: int, d: int) -> MonomialIndex:
    return MonomialIndex(nvars, d)


def basis_size(nvars: int, d: int) -> int:
    return comb(nvars + d, d)


def evaluate(p: Polynomial, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (p.nvars,):
        raise ValueError(f"point has shape {x.shape}, expected ({p.nvars},)")
    if not p.terms:
        return 0.0
    alphas = np.array(list(p.terms.keys()))
    coefs = np.array(list(p.terms.values()))
    return float(coefs @ np.prod(x[None, :] ** alphas, axis=1))


def monomial_values(alphas: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Matrix ``V[i, a] = points[i] ** alphas[a]`` for a batch of points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.prod(points[:, None, :] ** alphas[None, :, :], axis=2)


# --- variable layout -------------------------------------------------------


@dataclass(frozen=True)
class VariableLayout:
    """Map from complex party vectors to the real variables ``x``.

    ``mode='partitioned'``: party k occupies slots ``L(k-1) .. L(k)-1`` (0-based)
    with the real part first.  ``mode='symmetric'``: one vector of length n,
    real parts in slots ``0..n-1`` and imaginary parts in ``n..2n-1``; it is
    shared by all ``parties`` factors.
    """

    mode: str
    dims: tuple[int, ...]

    def __post_init__(self):
        if self.mode not in ("symmetric", "partitioned"):
            raise ValueError(f"unknown layout mode {self.mode!r}")
        dims = tuple(int(d) for d in self.dims)
        if not dims or min(dims) < 1:
            raise ValueError(f"invalid party dimensions {self.dims}")
        if self.mode == "symmetric" and len(set(dims)) != 1:
            raise ValueError("symmetric layout requires equal party dimensions")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def symmetric(cls, n: int, parties: int) -> VariableLayout:
        return cls("symmetric", (n,) * parties)

    @classmethod
    def partitioned(cls, dims: Sequence[int]) -> VariableLayout:
        return cls("partitioned", tuple(dims))

    @property
    def parties(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        """Complex dimension encoded by the variables (half of nvars)."""
        return self.dims[0] if self.mode == "symmetric" else sum(self.dims)

    @property
    def nvars(self) -> int:
        return 2 * self.n

    def offset(self, i: int) -> int:
        """``L(i) = 2 * (n_1 + ... + n_i)``; 0 in symmetric mode."""
        if self.mode == "symmetric":
            return 0
        return 2 * sum(self.dims[:i])

    def blocks(self) -> list[np.ndarray]:
        """Variable slots of each sphere block (one block in symmetric mode)."""
        if self.mode == "symmetric":
            return [np.arange(self.nvars)]
        return [np.arange(self.offset(k), self.offset(k + 1)) for k in range(self.parties)]

    def slots(self, party: int) -> tuple[np.ndarray, np.ndarray]:
        """(real slots, imaginary slots) of the vector used for ``party`` (0-based)."""
        if self.mode == "symmetric":
            n = self.n
            return np.arange(n), np.arange(n, 2 * n)
        lo, nk = self.offset(party), self.dims[party]
        return np.arange(lo, lo + nk), np.arange(lo + nk, lo + 2 * nk)

    def vectors(self, x: Sequence[float]) -> list[np.ndarray]:
        """Complex vectors encoded by ``x``: one per party, or a single one in symmetric mode."""
        x = np.asarray(x, dtype=float)
        count = 1 if self.mode == "symmetric" else self.parties
        out = []
        for k in range(count):
            re, im = self.slots(k)
            out.append(x[re] + 1j * x[im])
        return out

    def point(self, vectors: Sequence[np.ndarray]) -> np.ndarray:
        """Inverse of :meth:`vectors`."""
        x = np.zeros(self.nvars)
        for k, u in enumerate(vectors):
            re, im = self.slots(k)
            u = np.asarray(u, dtype=complex)
            x[re] = u.real
            x[im] = u.imag
        return x


def _complex_coordinate(layout: VariableLayout, party: int, i: int) -> tuple[Polynomial, Polynomial]:
    re, im = layout.slots(party)
    nv = layout.nvars
    return Polynomial.variable(nv, int(re[i])), Polynomial.variable(nv, int(im[i]))


@lru_cache(maxsize=4096)
def expand_pij(layout: VariableLayout, I: tuple[int, ...], J: tuple[int, ...]) -> tuple[Polynomial, Polynomial]:
    """Real and imaginary parts of ``prod_k u^(k)_{i_k} conj(u^(k)_{j_k})``.

    ``I`` and ``J`` are 1-based half-subscripts.
    """
    I, J = tuple(I), tuple(J)
    m = layout.parties
    if len(I) != m or len(J) != m:
        raise ValueError(f"half-subscripts must have length {m}")
    for idx in (I, J):
        for k, i in enumerate(idx):
            if not 1 <= i <= layout.dims[k]:
                raise ValueError(f"index {idx} out of range for dims {layout.dims}")
    nv = layout.nvars
    re = Polynomial.constant(nv, 1.0)
    imag = Polynomial(nv)
    for k in range(m):
        party = 0 if layout.mode == "symmetric" else k
        a, b = _complex_coordinate(layout, party, I[k] - 1)
        c, d = _complex_coordinate(layout, party, J[k] - 1)
        # (a + ib)(c - id)
        fr, fi = a * c + b * d, b * c - a * d
        re, imag = re * fr - imag * fi, re * fi + imag * fr
    return re, imag


def sphere_constraints(layout: VariableLayout) -> list[Polynomial]:
    """``|x^(k)|^2 - 1`` for every block of the layout."""
    nv = layout.nvars
    out = []
    for block in layout.blocks():
        terms = {}
        for j in block:
            alpha = [0] * nv
            alpha[j] = 2
            terms[tuple(alpha)] = 1.0
        terms[(0,) * nv] = -1.0
        out.append(Polynomial(nv, terms))
    return out


def random_sos(nvars: int, d: int, seed: int) -> Polynomial:
    """Sum of squares ``[x]^T R^T R [x]`` with a square Gaussian factor ``R``."""
    if d % 2:
        raise ValueError("SOS degree must be even")
    half = monomial_index(nvars, d // 2)
    rng = np.random.default_rng(seed)
    s = len(half)
    R = rng.standard_normal((s, s))
    gram = R.T @ R
    terms: dict[Monomial, float] = {}
    exps = half.exponents
    for i in range(s):
        for j in range(s):
            key = tuple(exps[i] + exps[j])
            terms[key] = terms.get(key, 0.0) + gram[i, j]
    return Polynomial(nvars, terms)


def polynomial_from_vector(coefs: Iterable[float], index: MonomialIndex) -> Polynomial:
    return Polynomial(index.nvars, {a: c for a, c in zip(index.monomials, coefs)})
