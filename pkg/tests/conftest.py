import os

import numpy as np
import pytest

TIER = os.environ.get("LAKES_TIER", "ci")


def pytest_report_header(config):
    return f"lakes test tier: {TIER} (set LAKES_TIER=full for the large-lattice checks)"


@pytest.fixture(scope="session")
def tier():
    return TIER


@pytest.fixture(scope="session")
def ruby22():
    """(lat, basis, sym, ops) for the 2x2 ruby torus on the symmetric sector."""
    from lakes.ruby import cached_system
    return cached_system(2, 2)


@pytest.fixture(scope="session")
def ruby22_full():
    """Same system on the full blockaded basis (per-site operators present)."""
    from lakes.ruby import cached_system
    return cached_system(2, 2, reduced=False)


@pytest.fixture(scope="session")
def dtc22():
    from lakes.dtc import build_dtc_lattice, dtc_operators
    lat = build_dtc_lattice(2, 2)
    return lat, dtc_operators(lat)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
