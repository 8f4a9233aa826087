import numpy as np
import pytest

from weylflow import HermitianEVD, PolarDecomposition, RealSVD


@pytest.fixture(scope="session")
def all_pairs():
    return [HermitianEVD(2), HermitianEVD(3), RealSVD(3, 2),
            RealSVD(2, 2), PolarDecomposition(2), PolarDecomposition(3)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
