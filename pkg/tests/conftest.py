import numpy as np
import pytest
from hypothesis import settings

from blockhhl.matrix import GeneratorSpec, generate_spd

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def corpus_block(seed, dominance=2.0):
    """Generated diagonally dominant block used by the corpus-level checks."""
    r = np.random.default_rng([seed, 77])
    n = int(r.integers(2, 33))
    density = float(r.uniform(0.05, 1.0))
    return generate_spd(GeneratorSpec(n, density, seed, dominance))


def random_unitary(n, rng, real=False):
    z = rng.standard_normal((n, n))
    if not real:
        z = z + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
