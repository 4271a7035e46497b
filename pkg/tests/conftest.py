import pytest

from gpvortex.potentials import Family, PotentialSpec

from helpers import SWEEP_EPS, harmonic_geometry, harmonic_profile, small_context


@pytest.fixture(scope="session")
def spec():
    return harmonic_geometry()[0]


@pytest.fixture(scope="session")
def geom():
    return harmonic_geometry()[1]


@pytest.fixture(scope="session")
def profiles():
    return {eps: harmonic_profile(eps) for eps in SWEEP_EPS}


@pytest.fixture(scope="session")
def ctx():
    return small_context()


@pytest.fixture(scope="session")
def power_law():
    return PotentialSpec(Family.POWER_LAW, {"p": 1.0, "scale": 1.0})

