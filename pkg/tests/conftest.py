import numpy as np
import pytest

from genbm.coeffs import (
    GeneratorCoeffsLine,
    GeneratorCoeffsTwoHalf,
    WalkParamsLine,
    WalkParamsTwoHalf,
)


@pytest.fixture
def absorbed_line():
    return GeneratorCoeffsLine(0.0, 0.0, 0.0, 1.0)


@pytest.fixture
def reflected_two_half():
    return GeneratorCoeffsTwoHalf(0, 0, 0, 0, 1, 1, 0, 0)


@pytest.fixture
def figure_walk_params():
    """Two-half walk with kill 0.25, escape scale 2 and asymmetric switching."""
    return WalkParamsTwoHalf(A_plus=0.25, A_minus=0.25, B_plus=2.0, B_minus=2.0,
                             C_plus=6.0, C_minus=4.0)


@pytest.fixture
def free_line_params():
    return WalkParamsLine(0.0, 0.0, 0.0)


def exp_abs(x):
    return np.exp(-np.abs(x))


def gauss(x):
    return np.exp(-np.square(x))
