import numpy as np
import pytest

from src.core.pauli import ZERO, PauliString, ScaledPauli, SignedPauli, support
from src.oracle.exact_oracle import pauli_dense, product_state_density
from src.sampling.pinning import Block, Configuration, HermitianMonomial
from src.sampling.stabilizer_output import (
    ProductState,
    estimate_observable,
    pauli_expectation,
    sample_state,
)
from src.utils.errors import DimensionError, InvariantError
from src.utils.randomness import enumerate_branches


def _config(c: float, label: str, n: int) -> Configuration:
    p = PauliString.from_label(label, n)
    return Configuration((Block(c, HermitianMonomial(ScaledPauli(1.0, SignedPauli(p)), 1, (), support(p))),))


def _mean_density(config: Configuration, n: int) -> np.ndarray:
    branches = enumerate_branches(lambda ch: sample_state(config, n, ch))
    return sum(b.probability * product_state_density(b.result) for b in branches)


class TestSampleState:
    def test_empty_config_is_maximally_mixed(self):
        assert np.allclose(_mean_density(Configuration(), 2), np.eye(4) / 4)

    def test_zz_block_with_unit_coefficient(self):
        config = _config(1.0, "Z0 Z1", 2)
        expected = (np.eye(4) + pauli_dense(PauliString.from_label("Z0 Z1", 2))) / 4
        assert np.allclose(_mean_density(config, 2), expected)

    def test_even_parity_signs_only(self, rng):
        config = _config(1.0, "Z0 Z1", 2)
        for _ in range(50):
            state = sample_state(config, 2, rng)
            (a0, s0), (a1, s1) = state.sites
            assert (a0, a1) == ("Z", "Z")
            assert s0 * s1 == 1, f"odd parity {state.sites}"

    @pytest.mark.parametrize("c,label", [(-0.6, "X0 Y2"), (0.3, "Y1"), (-1.0, "X0 Z1 Y2")])
    def test_mean_matches_normalized_config(self, c, label):
        n = 3
        expected = (np.eye(8) + c * pauli_dense(PauliString.from_label(label, n))) / 8
        assert np.allclose(_mean_density(_config(c, label, n), n), expected)

    def test_zero_block_leaves_sites_mixed(self):
        config = Configuration((Block(0.9, HermitianMonomial(ZERO, 2, (0, 0), frozenset({0, 1}))),))
        assert np.allclose(_mean_density(config, 2), np.eye(4) / 4)

    def test_coefficient_above_one(self, rng):
        with pytest.raises(InvariantError):
            sample_state(_config(1.5, "Z0", 1), 1, rng)

    def test_block_beyond_n(self, rng):
        with pytest.raises(DimensionError):
            sample_state(_config(0.5, "Z2", 3), 2, rng)

    def test_seeded_draws_repeat(self):
        config = _config(0.4, "X0 X1", 3)
        a = sample_state(config, 3, np.random.default_rng(9))
        b = sample_state(config, 3, np.random.default_rng(9))
        assert a == b


class TestObservables:
    def test_pauli_expectation(self):
        state = ProductState((("Z", 1), ("X", -1)))
        assert pauli_expectation(state, PauliString.from_label("Z0", 2)) == 1.0
        assert pauli_expectation(state, PauliString.from_label("Z0 X1", 2)) == -1.0
        assert pauli_expectation(state, PauliString.from_label("-Z0 X1", 2)) == 1.0
        assert pauli_expectation(state, PauliString.from_label("Y0", 2)) == 0.0

    def test_expectation_matches_density(self):
        state = ProductState((("Y", -1), ("Z", 1)))
        p = PauliString.from_label("Y0 Z1", 2)
        dense = np.trace(product_state_density(state) @ pauli_dense(p)).real
        assert pauli_expectation(state, p) == pytest.approx(dense)

    def test_estimate_observable(self):
        states = [ProductState((("Z", 1),)), ProductState((("Z", -1),)), ProductState((("Z", 1),))]
        mean, se = estimate_observable(states, PauliString.from_label("Z0", 1))
        assert mean == pytest.approx(1 / 3)
        assert se > 0

    def test_record(self):
        state = ProductState((("X", 1), ("Z", -1)))
        assert ProductState.from_record(state.to_record(seed=[1, 2])) == state
