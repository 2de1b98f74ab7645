import pytest

from rmflab import build_sieve


@pytest.fixture(scope="session")
def sieve200():
    return build_sieve(200)


@pytest.fixture(scope="session")
def sieve2k():
    return build_sieve(2000)


@pytest.fixture(scope="session")
def sieve20k():
    return build_sieve(20000)
