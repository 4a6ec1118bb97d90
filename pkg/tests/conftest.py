import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dynration import AllocationProfile, StepFunction, ex_ration, ex_twogen


@pytest.fixture
def ration_market():
    return ex_ration()


@pytest.fixture
def ration_optimum():
    """The rationing profile: sell to value one at t=1, lottery at t=2."""
    return AllocationProfile(
        (StepFunction.step(1), StepFunction.step(Fraction(2, 3), high=Fraction(1, 2)))
    )


@pytest.fixture
def twogen_market():
    return ex_twogen()


@pytest.fixture
def twogen_optimum():
    """Posted prices (1/2, 1/2): serve value one early, the rest late."""
    return AllocationProfile((StepFunction.step(1), StepFunction.step(Fraction(1, 2))))
