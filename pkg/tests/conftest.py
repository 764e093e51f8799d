import numpy as np
import pytest

from qphase import PhasePoint, StateVector, to_phase


def random_state(rng, n):
    amps = rng.normal(size=n) + 1j * rng.normal(size=n)
    return StateVector(amps / np.linalg.norm(amps))


def random_point(rng, n):
    return to_phase(random_state(rng, n))


def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
