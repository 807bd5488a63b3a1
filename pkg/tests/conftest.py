import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pgk.primes import PrimeCache  # noqa: E402


@pytest.fixture(scope="session")
def primes():
    """In-memory cache shared by the whole session (read-mostly)."""
    cache = PrimeCache()
    cache.ensure_count(20_000)
    return cache


@pytest.fixture(scope="session")
def small_primes():
    import oracles

    return oracles.first_primes(2_000)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
