import numpy as np
import pytest

from contact_thermo.fields import Grid, TrigTerm, random_trig_field, trig_field
from contact_thermo.geometry import ContactForm, torus3


@pytest.fixture(scope="session")
def model():
    return torus3()


@pytest.fixture(scope="session")
def lam0(model):
    return ContactForm.base(model)


@pytest.fixture(scope="session")
def grid32(model):
    return Grid.uniform(model.periods, 32)


@pytest.fixture(scope="session")
def grid64(model):
    return Grid.uniform(model.periods, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def monomial(kind, axis, freq=1, coef=1.0, label=None):
    return trig_field([TrigTerm(coef, ((kind, axis, freq),))], 3, label or f"{kind}{axis}")


def positive_field(rng, scale=0.2):
    return random_trig_field(rng, 3, scale=scale, constant=1.0)
