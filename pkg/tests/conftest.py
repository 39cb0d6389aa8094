import itertools
import math

import pytest
from hypothesis import settings

from wienerapprox.lattice import fits

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

R_VALUES = [0.5, 1.0, 2.0, math.inf]


def cube_count(s, r, d):
    """Points of [-s, s]^d inside the l_r ball of radius s, by direct scan."""
    rng = range(-s, s + 1)
    return sum(1 for k in itertools.product(rng, repeat=d) if fits([abs(x) for x in k], s, r))


@pytest.fixture
def cube():
    return cube_count
