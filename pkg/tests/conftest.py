import pytest

from evclt.design import DesignSequence
from evclt.model import ErrorDistribution, EVModelSpec


@pytest.fixture
def linear_design():
    return DesignSequence("linear", {"slope": 1.0}, seed=0)


@pytest.fixture
def standard_spec():
    """theta=1, beta=2, both errors standard normal: Var(nu) = 5."""
    return EVModelSpec(
        theta=1.0,
        beta=2.0,
        eps_dist=ErrorDistribution("normal", 1.0),
        delta_dist=ErrorDistribution("normal", 1.0),
    )


@pytest.fixture
def noiseless_spec():
    return EVModelSpec(
        theta=2.0,
        beta=3.0,
        eps_dist=ErrorDistribution("normal", 0.0),
        delta_dist=ErrorDistribution("normal", 0.0),
    )


def catalog_designs(seed: int = 0):
    """One design per generator regime; geometric stays short of overflow."""
    return [
        DesignSequence("linear", {"slope": 1.0}, seed),
        DesignSequence("power", {"exponent": 2.0}, seed),
        DesignSequence("alternating", {"scale": 1.0}, seed),
        DesignSequence("geometric", {"base": 2.0}, seed),
        DesignSequence("bounded", {"scale": 1.0}, seed),
        DesignSequence("gaussian-iid", {"sd": 1.0}, seed),
    ]
