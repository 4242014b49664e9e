import pytest

from bsc.model import reset_fresh_counter


@pytest.fixture(autouse=True)
def _fresh_numbering():
    # every test sees fresh objects numbered from #0 (ids stay interned, so
    # cached structures built under an earlier reset remain valid)
    reset_fresh_counter()
    yield


@pytest.fixture
def warehouse():
    from helpers import load

    return load("warehouse.bsc")


@pytest.fixture
def warehouse1():
    from helpers import load

    return load("warehouse1.bsc")


@pytest.fixture
def photo():
    from helpers import load

    return load("photo.bsc")


@pytest.fixture
def noop():
    from helpers import load

    return load("noop.bsc")


@pytest.fixture
def blocks():
    from helpers import load

    return load("blocks.bsc")


@pytest.fixture
def isclean():
    from helpers import load

    return load("isclean.bsc")
