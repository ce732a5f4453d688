from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepmoment.poly_algebra import (
    Polynomial,
    VariableLayout,
    evaluate,
    expand_pij,
    monomial_basis,
    monomial_index,
    monomial_values,
    polynomial_from_vector,
    random_sos,
    sphere_constraints,
)
from sepmoment.tensor_core import reduced_index_pairs

X = Polynomial.variable


def test_basis_small():
    assert monomial_basis(2, 1) == [(0, 0), (1, 0), (0, 1)]
    assert monomial_basis(2, 2)[3:] == [(2, 0), (1, 1), (0, 2)]


@pytest.mark.parametrize("nvars,d", [(4, 3), (8, 3), (1, 0), (3, 5), (6, 4)])
def test_basis_size_and_order(nvars, d):
    basis = monomial_basis(nvars, d)
    assert len(basis) == comb(nvars + d, d)
    keys = [(sum(a), tuple(-e for e in a)) for a in basis]
    assert all(k1 < k2 for k1, k2 in zip(keys, keys[1:]))
    index = monomial_index(nvars, d)
    assert all(index[a] == i for i, a in enumerate(basis))


def test_basis_rejects_bad_input():
    with pytest.raises(ValueError):
        monomial_basis(0, 2)


def test_arithmetic():
    x, y = X(2, 0), X(2, 1)
    p = (x + y) ** 2
    assert p.terms == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}
    assert (p - p).is_zero()
    assert (3 - x).terms == {(0, 0): 3.0, (1, 0): -1.0}
    assert (x * 2.0 * y).degree == 2
    with pytest.raises(ValueError):
        x + X(3, 0)


def test_evaluate_examples():
    assert evaluate(Polynomial(1, {(0,): 3, (2,): 2}), [0.0]) == 3
    assert evaluate(X(2, 0) * X(2, 1), [2.0, 5.0]) == 10
    with pytest.raises(ValueError):
        evaluate(X(2, 0), [1.0])


def test_monomial_values_match_evaluate(rng):
    index = monomial_index(3, 3)
    pts = rng.standard_normal((5, 3))
    V = monomial_values(index.exponents, pts)
    coefs = rng.standard_normal(len(index))
    p = polynomial_from_vector(coefs, index)
    np.testing.assert_allclose(V @ coefs, [evaluate(p, x) for x in pts], rtol=1e-12)


def test_pij_single_coordinate():
    layout = VariableLayout.symmetric(1, 1)
    R, T = expand_pij(layout, (1,), (1,))
    assert R.terms == {(2, 0): 1.0, (0, 2): 1.0}
    assert T.is_zero()


def test_pij_two_qubit_symmetric():
    layout = VariableLayout.symmetric(2, 2)
    R, T = expand_pij(layout, (1, 1), (1, 2))
    x1, x2, x3, x4 = (X(4, j) for j in range(4))
    assert R.allclose((x1**2 + x3**2) * (x1 * x2 + x3 * x4))
    assert T.allclose((x1**2 + x3**2) * (x2 * x3 - x1 * x4))


LAYOUTS = [
    VariableLayout.symmetric(2, 2),
    VariableLayout.symmetric(2, 3),
    VariableLayout.symmetric(3, 2),
    VariableLayout.partitioned((2, 2)),
    VariableLayout.partitioned((2, 3)),
]


def _direct(layout, x, I, J):
    vecs = layout.vectors(x)
    out = 1.0 + 0j
    for k in range(layout.parties):
        u = vecs[0] if layout.mode == "symmetric" else vecs[k]
        out *= u[I[k] - 1] * np.conj(u[J[k] - 1])
    return out


@pytest.mark.parametrize("layout", LAYOUTS, ids=lambda l: f"{l.mode}-{l.dims}")
def test_pij_matches_complex_arithmetic(layout, rng):
    index = monomial_index(layout.nvars, 2 * layout.parties)
    pts = rng.standard_normal((1000, layout.nvars))
    V = monomial_values(index.exponents, pts)
    for I, J in reduced_index_pairs(layout.dims, layout.mode == "symmetric"):
        R, T = expand_pij(layout, I, J)
        r = V @ np.array([R.terms.get(a, 0.0) for a in index.monomials])
        t = V @ np.array([T.terms.get(a, 0.0) for a in index.monomials])
        direct = np.array([_direct(layout, x, I, J) for x in pts])
        assert np.abs(r + 1j * t - direct).max() <= 1e-10 * max(1.0, np.abs(direct).max())


@pytest.mark.parametrize("layout", LAYOUTS, ids=lambda l: f"{l.mode}-{l.dims}")
def test_pij_structure(layout):
    m = layout.parties
    blocks = layout.blocks()
    for I, J in reduced_index_pairs(layout.dims, layout.mode == "symmetric"):
        R, T = expand_pij(layout, I, J)
        Rc, Tc = expand_pij(layout, J, I)
        assert R == Rc
        assert T == -Tc
        if I == J:
            assert T.is_zero()
        for p in (R, T):
            for alpha in p.terms:
                assert sum(alpha) == 2 * m
                for blk in blocks:
                    assert sum(alpha[j] for j in blk) % 2 == 0
        assert R.degree == 2 * m


def test_pij_rejects_bad_index():
    with pytest.raises(ValueError):
        expand_pij(VariableLayout.partitioned((2, 2)), (1, 3), (1, 1))
    with pytest.raises(ValueError):
        expand_pij(VariableLayout.partitioned((2, 2)), (1,), (1,))


def test_sphere_constraints():
    (h,) = sphere_constraints(VariableLayout.symmetric(2, 2))
    assert h.terms == {(2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1.0, (0, 0, 2, 0): 1.0, (0, 0, 0, 2): 1.0, (0, 0, 0, 0): -1.0}
    layout = VariableLayout.partitioned((2, 2))
    hs = sphere_constraints(layout)
    assert len(hs) == 2
    assert {j for a in hs[0].terms for j, e in enumerate(a) if e} == {0, 1, 2, 3}
    assert {j for a in hs[1].terms for j, e in enumerate(a) if e} == {4, 5, 6, 7}
    e1 = layout.point([np.array([1, 0]), np.array([1, 0])])
    assert all(evaluate(q, e1) == 0 for q in hs)


@pytest.mark.parametrize("layout", LAYOUTS, ids=lambda l: f"{l.mode}-{l.dims}")
def test_sphere_constraints_vanish_on_spheres(layout, rng):
    hs = sphere_constraints(layout)
    for _ in range(100):
        x = rng.standard_normal(layout.nvars)
        for blk in layout.blocks():
            x[blk] /= np.linalg.norm(x[blk])
        assert max(abs(evaluate(h, x)) for h in hs) <= 1e-14


def test_layout_roundtrip(rng):
    layout = VariableLayout.partitioned((2, 3))
    x = rng.standard_normal(layout.nvars)
    np.testing.assert_array_equal(layout.point(layout.vectors(x)), x)
    assert layout.offset(1) == 4 and layout.offset(2) == 10
    with pytest.raises(ValueError):
        VariableLayout("symmetric", (2, 3))


def test_random_sos_deterministic():
    assert random_sos(4, 6, 3).terms == random_sos(4, 6, 3).terms
    assert random_sos(4, 6, 3).terms != random_sos(4, 6, 4).terms
    with pytest.raises(ValueError):
        random_sos(2, 3, 0)


def test_random_sos_nonnegative(rng):
    F = random_sos(4, 6, 0)
    index = monomial_index(4, 6)
    coefs = np.array([F.terms.get(a, 0.0) for a in index.monomials])
    vals = monomial_values(index.exponents, rng.standard_normal((1000, 4)) * 2) @ coefs
    assert vals.min() >= 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_random_sos_has_full_degree(seed):
    F = random_sos(4, 6, seed)
    assert F.degree == 6
