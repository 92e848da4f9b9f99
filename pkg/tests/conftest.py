import numpy as np
import pytest

from levarray import ArrayConfig, BeamParams, SphereParams

PAPER_POWER = 0.1
PAPER_WAIST = 600e-9
PAPER_WAVELENGTH = 1550e-9
PAPER_DIAMETER = 200e-9
BASE_TRAP = 2 * np.pi * 100e3  # rad/s


@pytest.fixture(scope="session")
def paper_sphere():
    return SphereParams(diameter=PAPER_DIAMETER)


@pytest.fixture(scope="session")
def paper_beam_perp():
    return BeamParams(PAPER_POWER, PAPER_WAIST, PAPER_WAVELENGTH, np.pi / 2)


@pytest.fixture(scope="session")
def paper_beam_parallel():
    return BeamParams(PAPER_POWER, PAPER_WAIST, PAPER_WAVELENGTH, 0.0)


def beam_at(theta):
    return BeamParams(PAPER_POWER, PAPER_WAIST, PAPER_WAVELENGTH, theta)


@pytest.fixture(scope="session")
def paper_array(paper_beam_perp, paper_sphere):
    return ArrayConfig(
        n_sites=15,
        spacing=PAPER_WAVELENGTH,
        beam=paper_beam_perp,
        sphere=paper_sphere,
        trap_frequencies=BASE_TRAP,
    )
