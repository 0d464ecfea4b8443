import logging
import math

import numpy as np
import pytest

from ..codebook import build_codebook, spaced_constellation
from ..phy import LinkConfig
from ..sqam import SqamConstellation
from ..trellis import build_trellis


@pytest.fixture(autouse=True)
def restore_logging():
    """configure_logging replaces handlers; put them back after each test."""
    package = logging.getLogger("tukeysim")
    root = logging.getLogger()
    saved = (
        package.level, list(package.handlers), package.propagate,
        root.level, list(root.handlers),
    )
    yield
    package.setLevel(saved[0])
    package.handlers[:] = saved[1]
    package.propagate = saved[2]
    root.setLevel(saved[3])
    root.handlers[:] = saved[4]


@pytest.fixture
def example_constellation() -> SqamConstellation:
    """Three rings at 2, 4 and 6 times sqrt(2) with three phases."""
    return SqamConstellation(tuple(k * math.sqrt(2.0) for k in (2, 4, 6)), 3)


@pytest.fixture
def small_constellation() -> SqamConstellation:
    return spaced_constellation(3, 3, 1.0)


@pytest.fixture
def small_trellis(small_constellation):
    return build_trellis(small_constellation, 3)


@pytest.fixture
def small_codebook(small_constellation, small_trellis):
    return build_codebook(small_constellation, 3, trellis=small_trellis)


@pytest.fixture
def link() -> LinkConfig:
    return LinkConfig.c_band(drive_scale=0.05)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
