import numpy as np
import pytest

from latcurrent import CouplingSpec, build_hamiltonian_1d, make_generator


@pytest.fixture
def rng():
    return np.random.default_rng(8675309)


def chain_generator(v, c):
    return make_generator(build_hamiltonian_1d(v), c)


def random_couplings(rng, beta=0.0, lo=0.1, hi=2.0):
    return CouplingSpec(*rng.uniform(lo, hi, 4), beta)


def random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (A + A.conj().T)
