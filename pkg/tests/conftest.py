import math

import pytest

import ergolab as eg

PHI = (math.sqrt(5) - 1) / 2          # 0.6180339887498949
SQRT2M1 = math.sqrt(2) - 1            # 0.41421356237309515
TWO_SINK_B = 0.2 * math.pi            # amplitude 0.05 at frequency 2


@pytest.fixture(scope="session")
def golden_rotation():
    return eg.uniform_ifs([eg.Rotation(PHI)])


@pytest.fixture(scope="session")
def quarter_rotation():
    return eg.uniform_ifs([eg.Rotation(0.25)])


@pytest.fixture(scope="session")
def two_rotations():
    return eg.uniform_ifs([eg.Rotation(PHI), eg.Rotation(SQRT2M1)])


@pytest.fixture(scope="session")
def two_sink_map():
    return eg.CircleDiffeo(a=0.001, b=TWO_SINK_B, freq=2)


@pytest.fixture(scope="session")
def two_sink_ifs(two_sink_map):
    return eg.uniform_ifs([two_sink_map])


@pytest.fixture(scope="session")
def torus_ifs():
    return eg.uniform_ifs(
        [eg.ToralAutomorphism(((2, 1), (1, 1))), eg.ToralTranslation(PHI, SQRT2M1)]
    )
