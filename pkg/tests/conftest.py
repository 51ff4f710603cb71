import numpy as np
import pytest

from causalkl.densities import TruncatedGaussian
from causalkl.domain import DomainBox


@pytest.fixture(scope="session")
def std_domain() -> DomainBox:
    return DomainBox.interval(-3.0, 3.0)


@pytest.fixture(scope="session")
def std_gaussian(std_domain) -> TruncatedGaussian:
    return TruncatedGaussian(0.0, 1.0, std_domain)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
