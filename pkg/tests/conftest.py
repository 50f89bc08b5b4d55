from pathlib import Path

import pytest

from otray import ManifoldParams
from otray.disintegration import TestFunction
from otray.scenarios import load_scenario, materialize

TestFunction.__test__ = False  # dataclass, not a pytest test class

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def m2():
    return ManifoldParams(2, 1.0)


@pytest.fixture(scope="session")
def radial_scenario():
    return load_scenario(SCENARIO_DIR / "radial_band.toml")


@pytest.fixture(scope="session")
def radial_setup(radial_scenario):
    """(scenario, potential, band cylinder) for the default radial band."""
    u, cylinders = materialize(radial_scenario)
    return radial_scenario, u, cylinders[0]


@pytest.fixture(scope="session")
def two_band_scenario():
    return load_scenario(SCENARIO_DIR / "two_band.toml")
