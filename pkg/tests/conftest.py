import pytest

from embedlab.algebra import FieldSpec
from embedlab.ciphers import PRIMITIVE_POLYS
from embedlab.embed import EmbeddingParams


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def gf4():
    return FieldSpec(2, PRIMITIVE_POLYS[2])


@pytest.fixture(scope="session")
def gf16():
    return FieldSpec(4, PRIMITIVE_POLYS[4])


@pytest.fixture(scope="session")
def tiny_params(gf4):
    """ε on two bricks of GF(4): 16 states, 8 coordinates, admissible dimension 7."""
    return EmbeddingParams(gf4, 2)
