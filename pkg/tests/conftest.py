import math

import pytest

from symphonic.geometry import ProblemConfig

HALF_PI = 0.5 * math.pi


def sphere_join(m1=3, m2=3):
    """Identity join of round spheres: ``phi = t`` solves the reduced equation."""
    return ProblemConfig(m1=m1, m2=m2, norm1=m1, norm2=m2)


def asymmetric_join():
    return ProblemConfig(m1=3, m2=4, a=1.0, b=1.2, c=1.0, d=0.8, norm1=3, norm2=4)


@pytest.fixture
def sphere_cfg():
    return sphere_join()


@pytest.fixture
def asym_cfg():
    return asymmetric_join()
