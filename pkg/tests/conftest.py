import numpy as np
import pytest

from src.core.hamiltonian import Hamiltonian, make_term
from src.models.families import ChainTFIM
from src.sampling.tree_walk import PartitionMemo
from src.utils.randomness import Chooser


class ScriptChooser(Chooser):
    """Answers ``pick`` calls from a list, then takes the first live option."""

    def __init__(self, picks):
        self.picks = list(picks)

    def pick(self, probs):
        if self.picks:
            return self.picks.pop(0)
        return next(i for i, p in enumerate(probs) if p > 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_bond_chain():
    """Z0Z1 + Z1Z2 on three sites."""
    return Hamiltonian.build([make_term(1.0, "Z0 Z1", 3), make_term(1.0, "Z1 Z2", 3)], 3, 2)


@pytest.fixture
def single_term():
    return Hamiltonian.build([make_term(1.0, "Z0 Z1", 3)], 3, 2)


@pytest.fixture
def tfim3():
    return ChainTFIM(3).build()


@pytest.fixture
def tfim4():
    return ChainTFIM(4).build()


@pytest.fixture
def empty_hamiltonian():
    return Hamiltonian.build([], 3, 1)


@pytest.fixture
def memo():
    return PartitionMemo()


@pytest.fixture
def script_chooser():
    return ScriptChooser
