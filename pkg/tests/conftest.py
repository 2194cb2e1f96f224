import pytest
from mpmath import mp


@pytest.fixture(autouse=True)
def _default_precision():
    """Each test starts from the library default of 100 digits."""
    old = mp.dps
    mp.dps = 100
    yield
    mp.dps = old
