import numpy as np
import pytest

from cscadmm import FilterBank


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spectra(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300)


def impulse_bank(support=(1, 1)):
    d = np.zeros((1,) + tuple(support))
    d[0, 0, 0] = 1.0
    return FilterBank(d)
