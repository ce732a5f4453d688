import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepmoment import benchmarks as bm
from sepmoment.tensor_core import (
    Decomposition,
    HermitianTensor,
    NotHermitianError,
    PartyDims,
    StateEnsemble,
    TensorError,
    canonical_pair,
    check_structure,
    density_to_tensor,
    ensemble_to_tensor,
    normalize_trace,
    reconstruct,
    reduced_index_pairs,
    residual,
    symmetrize,
)

from conftest import projector, random_ket


def random_ensemble(rng, dims, k):
    p = rng.dirichlet(np.ones(k))
    return StateEnsemble(dims, tuple((pi, random_ket(rng, int(np.prod(dims)))) for pi in p))


def test_party_dims():
    d = PartyDims((2, 3))
    assert d.m == 2 and d.n == 5 and d.total == 6
    assert not d.equal
    with pytest.raises(TensorError):
        PartyDims((2, 0))
    with pytest.raises(TensorError):
        PartyDims(())


def test_single_product_term():
    e = StateEnsemble((2, 2), ((1.0, np.array([1, 0, 0, 0])),))
    H = ensemble_to_tensor(e)
    assert H.entry((1, 1), (1, 1)) == 1
    assert np.count_nonzero(H.data) == 1


def test_classical_mixture():
    e = StateEnsemble((2,), ((0.5, np.array([1, 0])), (0.5, np.array([0, 1]))))
    np.testing.assert_allclose(ensemble_to_tensor(e).matrix(), np.eye(2) / 2)


def test_ghz_w_entries():
    H = bm.wei_goldbart()
    assert H.entry((1, 1, 1), (2, 2, 2)) == pytest.approx(1 / 8)
    assert H.entry((1, 1, 2), (1, 1, 2)) == pytest.approx(1 / 8)
    rep = check_structure(H)
    assert rep.hermitian and rep.symmetric
    assert rep.trace == pytest.approx(1.0)


def test_ensemble_errors():
    with pytest.raises(TensorError):
        StateEnsemble((2, 2), ((1.0, np.array([1, 0, 0])),))
    with pytest.raises(TensorError):
        StateEnsemble((2,), ((0.9, np.array([1, 0])),))
    with pytest.raises(TensorError):
        StateEnsemble((2,), ((1.0, np.array([1, 1])),))


def test_density_examples():
    np.testing.assert_allclose(density_to_tensor(np.eye(2) / 2, (2,)).matrix(), np.eye(2) / 2)
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    H = density_to_tensor(projector(phi), (2, 2))
    for I in [(1, 1), (2, 2)]:
        for J in [(1, 1), (2, 2)]:
            assert H.entry(I, J) == pytest.approx(0.5)
    assert H.entry((1, 2), (1, 2)) == 0


def test_density_errors():
    bad = np.zeros((2, 2), dtype=complex)
    bad[0, 1] = 1
    with pytest.raises(NotHermitianError) as exc:
        density_to_tensor(bad, (2,))
    assert exc.value.max_asymmetry == pytest.approx(1.0)
    with pytest.raises(TensorError):
        density_to_tensor(np.eye(3), (2,))


def test_bell_mixture_cross_construction():
    a = np.array([1, 0, 0, 1]) / np.sqrt(2)
    b = np.array([0, 1, 1, 0]) / np.sqrt(2)
    rho = 0.5 * projector(a) + 0.5 * projector(b)
    np.testing.assert_allclose(density_to_tensor(rho, (2, 2)).data, bm.bell_mixture().data, atol=1e-12)


def test_ensemble_and_density_agree_on_random_states(rng):
    for _ in range(100):
        m = int(rng.integers(1, 4))
        dims = tuple(int(d) for d in rng.integers(1, 4, size=m))
        e = random_ensemble(rng, dims, int(rng.integers(1, 5)))
        H = ensemble_to_tensor(e)
        M = H.matrix()
        assert np.abs(M - M.conj().T).max() <= 1e-14
        assert H.trace == pytest.approx(1.0, abs=1e-12)
        rho = sum(p * projector(a.ravel()) for p, a in e.terms)
        np.testing.assert_allclose(density_to_tensor(rho, dims).data, H.data, atol=1e-12)


def test_check_structure_flags():
    data = np.zeros((2, 2, 2, 2), dtype=complex)
    data[0, 1, 0, 0] = 1
    rep = check_structure(HermitianTensor((2, 2), data))
    assert not rep.hermitian
    iso = bm.isotropic(2, 0.5)
    rep = check_structure(iso)
    assert rep.symmetric and rep.trace == pytest.approx(1.0)
    assert not check_structure(bm.random_separable((2, 3), 2, np.random.default_rng(0))).symmetric


def test_symmetrize_makes_symmetric(rng):
    H = ensemble_to_tensor(random_ensemble(rng, (2, 2), 3))
    assert not check_structure(H).symmetric
    S = symmetrize(H)
    assert check_structure(S, 1e-12).symmetric
    np.testing.assert_allclose(symmetrize(S).data, S.data, atol=1e-15)


def test_normalize_trace_warns():
    H = density_to_tensor(np.eye(2), (2,))
    with pytest.warns(UserWarning):
        same = normalize_trace(H)
    assert same.trace == pytest.approx(2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert normalize_trace(H, rescale=True).trace == pytest.approx(1.0)


def test_reduced_pair_counts():
    assert len(reduced_index_pairs((2, 2))) == 10
    assert reduced_index_pairs((2,)) == [((1,), (1,)), ((1,), (2,)), ((2,), (2,))]
    assert reduced_index_pairs((2,), symmetric=True) == reduced_index_pairs((2,))
    pairs = reduced_index_pairs((2, 2), symmetric=True)
    # simultaneous permutations do not identify ((1,2),(1,2)) with ((1,2),(2,1)),
    # so seven orbits remain
    assert len(pairs) == 7
    assert ((1, 2), (2, 1)) in pairs
    assert all(tuple(sorted(I)) == I and I <= J for I, J in pairs)
    with pytest.raises(TensorError):
        reduced_index_pairs((2, 3), symmetric=True)


@pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2), (3, 3)])
@pytest.mark.parametrize("symmetric", [False, True])
def test_every_pair_has_one_representative(dims, symmetric, rng):
    reps = reduced_index_pairs(dims, symmetric)
    assert len(set(reps)) == len(reps) and reps == sorted(reps)
    subs = PartyDims(dims).half_subscripts()
    hit = set()
    H = ensemble_to_tensor(random_ensemble(rng, dims, 3))
    if symmetric:
        H = symmetrize(H)
    for I in subs:
        for J in subs:
            cI, cJ, conj = canonical_pair(I, J, symmetric)
            assert (cI, cJ) in reps
            hit.add((cI, cJ))
            v = H.entry(cI, cJ)
            assert H.entry(I, J) == pytest.approx(np.conj(v) if conj else v, abs=1e-14)
    assert hit == set(reps)


def test_reconstruct_examples():
    d = Decomposition(False, [1.0], ((np.array([1, 0]),),))
    np.testing.assert_array_equal(reconstruct(d, (2,)).matrix(), np.diag([1, 0]))
    with pytest.raises(TensorError):
        reconstruct(d, (3,))
    with pytest.raises(TensorError):
        Decomposition(False, [1.0, -0.1], ((np.array([1, 0]),), (np.array([0, 1]),)))


def test_printed_decompositions_match_states():
    d1 = Decomposition(True, np.full(3, 1 / 3), tuple((v / np.linalg.norm(v),) for v in bm.WEI_GOLDBART_ATOMS))
    assert residual(bm.wei_goldbart(), reconstruct(d1, (2, 2, 2))) <= 1e-3
    d2 = Decomposition(True, [0.5, 0.5], tuple((v / np.linalg.norm(v),) for v in bm.BELL_MIXTURE_ATOMS))
    assert residual(bm.bell_mixture(), reconstruct(d2, (2, 2))) <= 1e-3


def test_real_atoms_give_real_tensor(rng):
    atoms = tuple((rng.standard_normal(2), rng.standard_normal(3)) for _ in range(3))
    atoms = tuple(tuple(v / np.linalg.norm(v) for v in a) for a in atoms)
    T = reconstruct(Decomposition(False, [0.2, 0.3, 0.5], atoms), (2, 3))
    assert np.all(T.data.imag == 0)


def test_partitioned_phase_gauge(rng):
    atoms = [(random_ket(rng, 2), random_ket(rng, 2)) for _ in range(3)]
    w = [0.5, 0.25, 0.25]
    T0 = reconstruct(Decomposition(False, w, tuple(atoms)), (2, 2))
    rotated = tuple(tuple(np.exp(1j * rng.uniform(0, 2 * np.pi)) * v for v in a) for a in atoms)
    T1 = reconstruct(Decomposition(False, w, rotated), (2, 2))
    np.testing.assert_allclose(T0.data, T1.data, atol=1e-14)


def test_residual_examples():
    A = density_to_tensor(np.diag([1, 0]), (2,))
    B = density_to_tensor(np.diag([0, 1]), (2,))
    assert residual(A, A) == 0
    assert residual(A, B) == pytest.approx(np.sqrt(2))
    with pytest.raises(TensorError):
        residual(A, density_to_tensor(np.eye(4) / 4, (2, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_residual_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (ensemble_to_tensor(random_ensemble(rng, (2, 2), 2)) for _ in range(3))
    assert residual(A, B) >= 0
    assert residual(A, B) == pytest.approx(residual(B, A))
    assert residual(A, C) <= residual(A, B) + residual(B, C) + 1e-15


def test_idempotent_reconstruct(rng):
    atoms = tuple((random_ket(rng, 3),) for _ in range(4))
    d = Decomposition(True, rng.dirichlet(np.ones(4)), atoms)
    T = reconstruct(d, (3, 3))
    assert residual(T, reconstruct(d, (3, 3))) == 0
    assert check_structure(T, 1e-14).symmetric


def test_half_subscripts_lexicographic():
    subs = PartyDims((2, 3)).half_subscripts()
    assert subs == list(itertools.product((1, 2), (1, 2, 3)))
    assert [PartyDims((2, 3)).flat(I) for I in subs] == list(range(6))
