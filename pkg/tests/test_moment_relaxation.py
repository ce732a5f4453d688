import numpy as np
import pytest
import scipy.sparse as sp

from sepmoment import benchmarks as bm
from sepmoment.moment_relaxation import (
    SdpProblem,
    TruncatedMomentSequence,
    assemble_sdp,
    localizing_matrix,
    localizing_symbolic,
    moment_matrix,
    moment_matrix_symbolic,
    riesz,
    write_sdp_dump,
)
from sepmoment.poly_algebra import Polynomial, expand_pij, VariableLayout, evaluate, random_sos, sphere_constraints
from sepmoment.tensor_core import Decomposition, TensorError, reconstruct, reduced_index_pairs

from conftest import random_ket

X = Polynomial.variable
TWO_ATOMS = TruncatedMomentSequence.from_measure([[1, 0], [0, 1]], [0.5, 0.5], 4)


def random_sphere_measure(rng, layout, r):
    pts = rng.standard_normal((r, layout.nvars))
    for blk in layout.blocks():
        pts[:, blk] /= np.linalg.norm(pts[:, blk], axis=1, keepdims=True)
    return pts, rng.uniform(0.1, 1.0, r)


def test_sequence_basics():
    y = TruncatedMomentSequence(1, 2, [1, 2, 4])
    assert y.mass == 1 and y[(1,)] == 2
    assert y.truncate(1).values.tolist() == [1, 2]
    with pytest.raises(ValueError):
        TruncatedMomentSequence(1, 2, [1, 2])
    with pytest.raises(ValueError):
        y.truncate(3)


def test_riesz_examples(rng):
    y = TruncatedMomentSequence(1, 2, [1, 0, 5])
    assert riesz(Polynomial.constant(1, 1), y) == 1
    assert riesz(Polynomial(1, {(0,): 3, (2,): 2}), y) == 13
    with pytest.raises(ValueError):
        riesz(X(1, 0) ** 3, y)
    pts, w = rng.standard_normal((4, 3)), rng.uniform(0, 1, 4)
    z = TruncatedMomentSequence.from_measure(pts, w, 4)
    p = random_sos(3, 4, 7) + X(3, 1) * 0.3
    assert riesz(p, z) == pytest.approx(sum(wi * evaluate(p, x) for wi, x in zip(w, pts)), rel=1e-10)


def test_moment_matrix_examples():
    M = moment_matrix(TruncatedMomentSequence(1, 2, [1, 2, 4]), 1)
    np.testing.assert_array_equal(M, [[1, 2], [2, 4]])
    assert np.linalg.matrix_rank(M) == 1
    M = moment_matrix(TWO_ATOMS, 1)
    np.testing.assert_allclose(M, [[1, 0.5, 0.5], [0.5, 0.5, 0], [0.5, 0, 0.5]])
    assert np.linalg.matrix_rank(M) == 2
    with pytest.raises(ValueError):
        moment_matrix(TWO_ATOMS, 3)


def test_moment_matrix_cells_reference_one_moment():
    sym = moment_matrix_symbolic(3, 2)
    assert sym.size == 10
    assert np.all(sym.coefs == 1) and len(sym.moments) == sym.size**2


def test_localizing_examples():
    h = X(1, 0) ** 2 - 1
    L = localizing_matrix(h, TruncatedMomentSequence(1, 2, [1, 0.3, 0.7]), 1)
    np.testing.assert_allclose(L, [[0.7 - 1]])
    h2 = X(2, 0) ** 2 + X(2, 1) ** 2 - 1
    L = localizing_matrix(h2, TWO_ATOMS, 2)
    assert L.shape == (3, 3) and np.abs(L).max() <= 1e-12
    with pytest.raises(ValueError):
        localizing_symbolic(X(1, 0) ** 4, 1)


def test_linearity(rng):
    y1, y2 = rng.standard_normal(70), rng.standard_normal(70)
    a, b = 0.7, -1.3
    for build in (lambda y: moment_matrix(TruncatedMomentSequence(4, 4, y), 2),
                  lambda y: localizing_matrix(sphere_constraints(VariableLayout.symmetric(2, 2))[0], TruncatedMomentSequence(4, 4, y), 2)):
        np.testing.assert_allclose(build(a * y1 + b * y2), a * build(y1) + b * build(y2), atol=1e-13)


def test_symbolic_operator_and_adjoint(rng):
    sym = localizing_symbolic(sphere_constraints(VariableLayout.symmetric(2, 2))[0], 2)
    y = rng.standard_normal(70)
    np.testing.assert_allclose((sym.operator(70) @ y).reshape(sym.size, sym.size), sym.evaluate(y))
    Xm = rng.standard_normal((sym.size, sym.size))
    assert sym.adjoint(Xm, 70) @ y == pytest.approx(np.sum(sym.evaluate(y) * Xm))


@pytest.mark.parametrize("layout", [VariableLayout.symmetric(2, 2), VariableLayout.symmetric(3, 2), VariableLayout.partitioned((2, 2))], ids=str)
def test_necessity_on_random_measures(layout, rng):
    hs = sphere_constraints(layout)
    for _ in range(100 // 3 + 1):
        pts, w = random_sphere_measure(rng, layout, int(rng.integers(1, 6)))
        y = TruncatedMomentSequence.from_measure(pts, w, 4)
        M = moment_matrix(y, 2)
        assert np.linalg.eigvalsh(M)[0] >= -1e-9 * max(1.0, np.abs(M).max())
        for h in hs:
            assert np.abs(localizing_matrix(h, y, 2)).max() <= 1e-9


def test_symmetric_sizes():
    H = bm.bell_mixture()
    p = assemble_sdp(H, "symmetric", 3, random_sos(4, 6, 0))
    assert p.psd_blocks[0].size == 35
    pairs = reduced_index_pairs((2, 2), symmetric=True)
    layout = VariableLayout.symmetric(2, 2)
    im_rows = sum(1 for I, J in pairs if not expand_pij(layout, I, J)[1].is_zero())
    # ((1,2),(2,1)) is off-diagonal but |u1|^2 |u2|^2 has no imaginary part
    assert im_rows == 3
    assert p.A.shape[0] == len(pairs) + im_rows == 10
    assert p.zero_blocks[0].size == 15
    assert p.num_moments == 210


def test_partitioned_sizes_and_row_count():
    H = bm.random_separable((2, 2), 3, np.random.default_rng(2))
    p = assemble_sdp(H, "partitioned", 3, random_sos(8, 6, 0))
    assert p.psd_blocks[0].size == 165
    assert len(p.zero_blocks) == 2
    pairs = reduced_index_pairs((2, 2))
    assert p.A.shape[0] == sum(1 for I, J in pairs if I == J) + 2 * sum(1 for I, J in pairs if I != J)
    assert p.moment_bound == pytest.approx(1.0)


def test_assemble_errors():
    H = bm.random_separable((2, 2), 2, np.random.default_rng(0))
    with pytest.raises(TensorError):
        assemble_sdp(H, "symmetric", 3, random_sos(4, 6, 0))
    with pytest.raises(ValueError):
        assemble_sdp(H, "partitioned", 2, random_sos(8, 6, 0))
    with pytest.raises(ValueError):
        assemble_sdp(H, "partitioned", 3, random_sos(4, 6, 0))
    with pytest.raises(ValueError):
        assemble_sdp(H, "other", 3, random_sos(8, 6, 0))


@pytest.mark.parametrize("mode,dims", [("symmetric", (2, 2)), ("symmetric", (2, 2, 2)), ("partitioned", (2, 2)), ("partitioned", (2, 3))])
def test_rows_hold_at_true_moments(mode, dims, rng):
    layout = VariableLayout(mode, dims)
    r = 3
    if mode == "symmetric":
        atoms = tuple((random_ket(rng, dims[0]),) for _ in range(r))
    else:
        atoms = tuple(tuple(random_ket(rng, n) for n in dims) for _ in range(r))
    w = rng.dirichlet(np.ones(r))
    H = reconstruct(Decomposition(mode == "symmetric", w, atoms), dims)
    m = len(dims)
    k = m + 1
    p = assemble_sdp(H, mode, k, random_sos(layout.nvars, 2 * k, 0))
    pts = np.array([layout.point(a) for a in atoms])
    y = TruncatedMomentSequence.from_measure(pts, w, 2 * k).values
    assert np.abs(p.A @ y - p.b).max() <= 1e-9
    for blk in p.zero_blocks:
        assert np.abs(blk.evaluate(y)).max() <= 1e-9
    assert np.linalg.eigvalsh(p.psd_blocks[0].evaluate(y))[0] >= -1e-9


def test_problem_validation():
    sym = moment_matrix_symbolic(1, 1)
    with pytest.raises(ValueError):
        SdpProblem(3, np.zeros(2), sp.csr_matrix((0, 3)), np.zeros(0), [sym])
    with pytest.raises(ValueError):
        SdpProblem(3, np.zeros(3), sp.csr_matrix(np.array([[1.0, 0, 0], [0, 0, 0]])), np.zeros(2), [sym])
    with pytest.raises(ValueError):
        SdpProblem(2, np.zeros(2), sp.csr_matrix((0, 2)), np.zeros(0), [sym])


def test_dump(tmp_path):
    p = assemble_sdp(bm.bell_mixture(), "symmetric", 3, random_sos(4, 6, 0))
    path = tmp_path / "dump.txt"
    write_sdp_dump(p, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# num_moments 210"
    kinds = {ln.split()[0] for ln in lines[1:]}
    assert kinds == {"psd", "zero", "eq", "rhs", "obj"}
    assert sum(1 for ln in lines if ln.startswith("rhs")) == p.A.shape[0]
