import numpy as np
import pytest

from adaptmh.spd import factorize
from adaptmh.targets import Gaussian


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_spd(rng, d, log_spread=2.0):
    q = random_orthogonal(rng, d)
    lam = np.exp(rng.uniform(-log_spread, log_spread, size=d))
    mat = (q * lam) @ q.T
    return factorize(0.5 * (mat + mat.T))


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def gauss2():
    return Gaussian([0.0, 1.0], [[1.0, 0.5], [0.5, 2.0]])
