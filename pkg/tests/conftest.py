# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

import os

# The database layer reads it on import
os.environ.setdefault("DATABASE_URL", "sqlite+aiosqlite:///:memory:")

import numpy as np
import pytest
from pubsub import pub

from kerfscope.lib.synth.wafer import WaferSpec, generate_wafer


@pytest.fixture(autouse=True)
def clean_topics():
    yield
    pub.unsubAll()


@pytest.fixture(scope="session")
def small_spec() -> WaferSpec:
    return WaferSpec(
        grid_cols=4,
        grid_rows=4,
        chip_px=200,
        street_width_px=8,
        wafer_radius_chips=2.5,
        seed=7,
        fault_rate=0.3,
    )


@pytest.fixture(scope="session")
def small_wafer(small_spec):
    return generate_wafer(small_spec, "W000")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
