import numpy as np
import pytest

from grassavg.geometry import GrassmannPoint


def planar(angle, d=3):
    """span{cos(a) e1 + sin(a) e2} in R^d."""
    b = np.zeros((d, 1))
    b[0, 0], b[1, 0] = np.cos(angle), np.sin(angle)
    return GrassmannPoint(b)


def planar_angle(p):
    b = p.basis[:, 0]
    b = b if b[0] >= 0 else -b
    return float(np.arctan2(b[1], b[0]))


def span(*cols, d):
    b = np.zeros((d, len(cols)))
    for j, c in enumerate(cols):
        b[c, j] = 1.0
    return GrassmannPoint(b)


def spiked_sd(d, lead=(10.0, 5.0)):
    return np.sqrt(np.r_[lead, np.ones(d - len(lead))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
