import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_ket(rng, size):
    v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return v / np.linalg.norm(v)


def projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def partial_transpose_min_eig(rho, dims):
    """Smallest eigenvalue of the partial transpose on the second party."""
    a, b = dims
    r = rho.reshape(a, b, a, b).transpose(0, 3, 2, 1).reshape(a * b, a * b)
    return float(np.linalg.eigvalsh(r)[0])


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def emit(number, ok, detail, label=None):
        tag = "PASS" if ok else "FAIL"
        line = f"{tag} criterion {number}: {detail}" if label is None else f"{tag} criterion {number} ({label}): {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
