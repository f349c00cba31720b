import numpy as np
import pytest

from beamsteer.array_channel import ArrayGeometry, sample_paths


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def paths3(rng):
    return sample_paths(3, None, rng)


@pytest.fixture
def geoms():
    return ArrayGeometry(64), ArrayGeometry(8)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
