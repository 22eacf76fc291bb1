import numpy as np
import pytest

from stablesg.generators import (gen_example_affine, gen_planted_affine, gen_planted_lcc,
                                 gen_planted_projective)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng, d):
    q, r = np.linalg.qr(crandn(rng, d, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def example1_small():
    return gen_example_affine(10.0, 4)


@pytest.fixture(scope="session")
def planted_affine():
    # the seeded 3-dim instance: d=50, n=200, noise 1e-3
    return gen_planted_affine(50, 3, 200, 4.0, 1e-3, 1)


@pytest.fixture(scope="session")
def planted_affine_2d():
    return gen_planted_affine(30, 2, 120, 4.0, 1e-3, 3)


@pytest.fixture(scope="session")
def planted_projective():
    return gen_planted_projective(30, 4, 100, 0.5, 1e-4, 1)


@pytest.fixture(scope="session")
def planted_lcc():
    return gen_planted_lcc(3, 150, 3, 3.0, 1e-4, 2)
