import numpy as np
import pytest

from colorsail.sail import ColorSail


def random_focus(rng):
    pu, pv = rng.uniform(0.0, 1.0, size=2)
    if pu + pv > 1.0:
        pu, pv = 1.0 - pu, 1.0 - pv
    return float(pu), float(pv)


def random_sail(rng, s=None, max_wind=1.0):
    if s is None:
        s = int(rng.integers(2, 9))
    return ColorSail(
        vertices=rng.uniform(0.0, 1.0, size=(3, 3)),
        focus=random_focus(rng),
        wind=float(rng.uniform(-max_wind, max_wind)),
        subdivision=s,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
