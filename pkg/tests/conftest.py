import cmath
import math

import numpy as np
import pytest

from hydrodetect.rigid import Configuration
from hydrodetect.shape import ShapeSpec


def random_shape(rng, max_tail=6):
    """Random univalent shape: sum k |c_-k| <= 0.6 |c1| keeps f' != 0 outside the disk."""
    c1 = rng.uniform(0.7, 1.5) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
    M = int(rng.integers(1, max_tail + 1))
    tail = rng.normal(size=M) + 1j * rng.normal(size=M)
    weight = np.sum(np.arange(1, M + 1) * np.abs(tail))
    tail *= rng.uniform(0.2, 0.6) * abs(c1) / weight
    return ShapeSpec(c1, tuple(tail))


def random_config(rng, r_scale=1.0):
    return Configuration.make(
        rng.uniform(0, 2 * math.pi),
        r_scale * complex(rng.normal(), rng.normal()),
        rng.normal(),
        complex(rng.normal(), rng.normal()),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
