import numpy as np
import pytest
from hypothesis import HealthCheck, assume, settings
from hypothesis import strategies as st

from excursion.errors import InvalidLaw
from excursion.walk_model import build_model, validate

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow]
)
settings.load_profile("default")

STEPS = (-1, 0, 1)


def law3(p_down, p_zero, p_up):
    return validate(STEPS, (p_down, p_zero, p_up))


DSTAR = law3(0.5, 0.3, 0.2)
ASYM = law3(0.6, 0.2, 0.2)
POS = law3(0.2, 0.3, 0.5)


@st.composite
def laws(draw, sign=None, reach=3, min_drift=0.02):
    """Random aperiodic finite laws on [-reach, reach]; sign=-1/+1 constrains the drift.

    Ladder tables cost O(1/drift^2) steps, so ladder tests ask for a larger min_drift.
    """
    support = draw(st.lists(st.integers(-reach, reach), min_size=2, max_size=2 * reach + 1, unique=True))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=len(support), max_size=len(support)))
    w = np.asarray(weights)
    probs = (w / w.sum()).tolist()
    try:
        law = validate(support, probs)
    except InvalidLaw:
        assume(False)
    if sign is not None:
        assume(sign * law.mean > min_drift)
    return law


@pytest.fixture(scope="session")
def dstar_model():
    return build_model(DSTAR)


@pytest.fixture(scope="session")
def asym_model():
    return build_model(ASYM)
