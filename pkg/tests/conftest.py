import os
from pathlib import Path

import pytest

from twistlab.cache import load_or_build
from twistlab.curve import CURVE_11A1

CACHE_DIR = Path(os.environ.get("TWISTLAB_TEST_CACHE", Path(__file__).resolve().parent.parent / ".twistlab-cache"))
TABLE_SIZE = 10**6


@pytest.fixture(scope="session")
def curve():
    return CURVE_11A1


@pytest.fixture(scope="session")
def table(curve):
    """a(n) and lambda(p) up to 10^6, cached on disk between runs."""
    return load_or_build(curve, CACHE_DIR, TABLE_SIZE, TABLE_SIZE)


@pytest.fixture(scope="session")
def small_table(curve):
    from twistlab.curve import build_coefficients

    return build_coefficients(curve, 5000)


@pytest.fixture(scope="session")
def family_1e5(curve, table):
    """Class-sorted family on [X/2, 5X/2] at X = 10^5 with zero weights at L = log X."""
    import math

    from twistlab.experiments import family_sample
    from twistlab.explicit import FEJER, zero_weights_batch

    X = 1e5
    sample = family_sample(curve, X)
    Z = zero_weights_batch(curve, table, sample.ds, [math.log(X)], FEJER)[0]
    return sample, Z


# one line per acceptance criterion, echoed in the terminal summary
CRITERION_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERION_LINES):
            terminalreporter.write_line(CRITERION_LINES[k])
