"""Reference states used by the tests, the acceptance suite and ``sepmoment bench``."""

from __future__ import annotations

import numpy as np

from .tensor_core import HermitianTensor, StateEnsemble, density_to_tensor, ensemble_to_tensor, product_state


def _ket(dims, entries: dict) -> np.ndarray:
    """Amplitude vector from ``{"011": amplitude, ...}`` in the computational basis."""
    out = np.zeros(int(np.prod(dims)), dtype=complex)
    for bits, amp in entries.items():
        out[int(np.ravel_multi_index(tuple(int(b) for b in bits), dims))] = amp
    return out


def wei_goldbart(p: float = 0.25, q: float = 0.375) -> HermitianTensor:
    """``p |GHZ><GHZ| + q |W><W| + (1-p-q) |W~><W~|`` on three qubits."""
    d = (2, 2, 2)
    ghz = _ket(d, {"000": 1, "111": 1}) / np.sqrt(2)
    w = _ket(d, {"001": 1, "010": 1, "100": 1}) / np.sqrt(3)
    wt = _ket(d, {"110": 1, "101": 1, "011": 1}) / np.sqrt(3)
    return ensemble_to_tensor(StateEnsemble(d, ((p, ghz), (q, w), (1 - p - q, wt))))


WEI_GOLDBART_ATOMS = (
    np.array([0.1222 - 0.6965j, 0.1222 - 0.6965j]),
    np.array([0.5293 + 0.4689j, 0.1414 - 0.6928j]),
    np.array([-0.4830 - 0.5165j, 0.6888 - 0.1601j]),
)


def bell_mixture() -> HermitianTensor:
    """Equal mixture of ``(|00> + |11>)/sqrt2`` and ``(|01> + |10>)/sqrt2``."""
    d = (2, 2)
    a = _ket(d, {"00": 1, "11": 1}) / np.sqrt(2)
    b = _ket(d, {"01": 1, "10": 1}) / np.sqrt(2)
    return ensemble_to_tensor(StateEnsemble(d, ((0.5, a), (0.5, b))))


BELL_MIXTURE_ATOMS = (
    np.array([-0.5992 - 0.3754j, -0.5992 - 0.3754j]),
    np.array([-0.4303 + 0.5611j, 0.4303 - 0.5611j]),
)


RANDOM_SEVEN = (
    np.array([0.1865 - 0.0210j, 0.7198 + 0.6684j]),
    np.array([0.3857 + 0.5437j, 0.4330 + 0.6067j]),
    np.array([0.5296 + 0.6557j, 0.3881 + 0.3800j]),
    np.array([-0.0967 + 0.8886j, 0.0243 + 0.4477j]),
    np.array([0.7262 + 0.4409j, 0.1067 + 0.5166j]),
    np.array([-0.1165 + 0.4494j, 0.8815 - 0.0864j]),
    np.array([0.9394 + 0.0557j, 0.2231 + 0.2544j]),
)


def seven_term_mixture() -> HermitianTensor:
    """``(1/7) sum_k |phi_k phi_k><phi_k phi_k|`` with the listed amplitudes.

    The printed amplitudes carry four decimals, so each is renormalized.
    """
    terms = []
    for v in RANDOM_SEVEN:
        v = v / np.linalg.norm(v)
        terms.append((1 / 7, np.kron(v, v)))
    return ensemble_to_tensor(StateEnsemble((2, 2), tuple(terms)))


def isotropic(n: int, F: float) -> HermitianTensor:
    """``(1-F)/(n^2-1) (I - |Phi+><Phi+|) + F |Phi+><Phi+|`` on two qudits."""
    phi = np.zeros(n * n)
    phi[np.arange(n) * (n + 1)] = 1 / np.sqrt(n)
    proj = np.outer(phi, phi)
    rho = (1 - F) / (n * n - 1) * (np.eye(n * n) - proj) + F * proj
    return density_to_tensor(rho, (n, n))


def random_unit(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def symmetrized_product_mixture(n: int, m: int, rng: np.random.Generator) -> HermitianTensor:
    """Uniform mixture of ``|phi_P(1) ... phi_P(m)>`` over all orderings of ``m`` random states."""
    import itertools

    phis = [random_unit(n, rng) for _ in range(m)]
    perms = list(itertools.permutations(range(m)))
    terms = tuple((1 / len(perms), product_state(phis[i] for i in p)) for p in perms)
    return ensemble_to_tensor(StateEnsemble((n,) * m, terms))


def random_symmetric_separable(n: int, m: int, r: int, rng: np.random.Generator) -> HermitianTensor:
    """``sum_k p_k |phi_k>^{x m}<phi_k|^{x m}`` with Dirichlet weights."""
    p = rng.dirichlet(np.ones(r))
    terms = []
    for pk in p:
        v = random_unit(n, rng)
        terms.append((pk, product_state([v] * m)))
    return ensemble_to_tensor(StateEnsemble((n,) * m, tuple(terms)))


def random_separable(dims, r: int, rng: np.random.Generator) -> HermitianTensor:
    p = rng.dirichlet(np.ones(r))
    terms = tuple((pk, product_state(random_unit(n, rng) for n in dims)) for pk in p)
    return ensemble_to_tensor(StateEnsemble(tuple(dims), terms))
