import numpy as np
import pytest

from src.core.hamiltonian import BetaMode, Hamiltonian, critical_beta, make_term
from src.core.pauli import ZERO, PauliString, ScaledPauli, SignedPauli, support
from src.models.families import ChainTFIM, GridZZ, HeisenbergChain
from src.oracle.exact_oracle import is_psd, pauli_dense
from src.sampling.monomial_sampler import truncated_series_dense
from src.sampling.pinning import (
    Block,
    Configuration,
    HermitianMonomial,
    PinState,
    block_trace,
    config_trace,
    evaluate_config_dense,
    initial_state,
    pin_step,
    potential_violations,
    run_pinning,
    run_separability,
)
from src.utils.errors import InvariantError, PreconditionError, ThresholdError
from src.utils.randomness import enumerate_branches


def _block(c: float, label: str, n: int) -> Block:
    p = PauliString.from_label(label, n)
    return Block(c, HermitianMonomial(ScaledPauli(1.0, SignedPauli(p)), 1, (), support(p)))


def _step_series(h: Hamiltonian, state: PinState) -> np.ndarray:
    """T_{t_max, beta/2}(H^(S), H^(S) near a*) for the term the next step pins."""
    restricted = h.restricted_terms(state.S)
    touched = state.config.blocks[-1].monomial.formal_support if len(state.config) else frozenset()
    a_star = next((a for a in restricted if h.supports[a] & touched), restricted[0])
    Q = [a for a in h.localized_terms(h.supports[a_star]) if a in restricted]
    return truncated_series_dense(h, Q, state.beta / 2, state.t_max, active=restricted)


def _assert_step_mean(h: Hamiltonian, state: PinState) -> None:
    branches = enumerate_branches(lambda ch: evaluate_config_dense(pin_step(h, state, ch).config, h.n))
    assert abs(sum(b.probability for b in branches) - 1) < 1e-12
    mean = sum(b.probability * b.result for b in branches)
    T = _step_series(h, state)
    expected = T.conj().T @ evaluate_config_dense(state.config, h.n) @ T
    err = np.max(np.abs(mean - expected))
    assert err < 1e-10, f"step mean off by {err} over {len(branches)} branches"


class TestEvaluate:
    def test_empty_config_is_identity(self):
        assert np.allclose(evaluate_config_dense(Configuration(), 3), np.eye(8))

    def test_single_z_block(self):
        config = Configuration((_block(0.5, "Z0", 1),))
        assert np.allclose(evaluate_config_dense(config, 1), np.diag([1.5, 0.5]))

    def test_zero_block_is_identity(self):
        mono = HermitianMonomial(ZERO, 2, (0, 0), frozenset({0}))
        config = Configuration((Block(0.7, mono),))
        assert np.allclose(evaluate_config_dense(config, 1), np.eye(2))

    def test_overlapping_blocks_rejected(self):
        config = Configuration((_block(0.5, "Z0", 2), _block(0.5, "X0", 2)))
        with pytest.raises(InvariantError):
            evaluate_config_dense(config, 2)

    def test_small_coefficients_give_psd(self, rng):
        axes = "XYZ"
        for _ in range(20):
            labels = [f"{axes[rng.integers(3)]}{s}" for s in range(3)]
            blocks = tuple(_block(float(rng.uniform(-1, 1)), lab, 3) for lab in labels)
            assert is_psd(evaluate_config_dense(Configuration(blocks), 3), 1e-12)


class TestTrace:
    def test_empty(self):
        assert config_trace(Configuration(), 5) == 32

    def test_traceless_block(self):
        assert config_trace(Configuration((_block(0.5, "Z0 Z1", 2),)), 2) == 4

    def test_identity_block(self):
        mono = HermitianMonomial(ScaledPauli(1.0, SignedPauli(PauliString.identity(3))), 2, (0, 0), frozenset({0, 1}))
        block = Block(0.5, mono)
        assert config_trace(Configuration((block,)), 3) == 12
        assert block_trace(block) == 6

    def test_matches_dense_trace(self, tfim3, rng):
        beta = critical_beta(tfim3, BetaMode.SEPARABILITY) / 2
        for _ in range(20):
            config = run_separability(tfim3, beta, rng)
            dense = np.trace(evaluate_config_dense(config, 3)).real
            assert abs(dense - config_trace(config, 3)) < 1e-9


class TestPinStep:
    def test_first_step_opens_a_block(self, tfim3, rng):
        state = initial_state(tfim3, 1e-4, 5)
        nxt = pin_step(tfim3, state, rng)
        assert len(nxt.config) == 1
        assert nxt.S == state.S - tfim3.supports[0]

    def test_stay_branch_with_zero_coefficient(self, tfim3, script_chooser):
        state = initial_state(tfim3, 1e-4, 1)
        # both propagators at degree 0, then xi = 0
        nxt = pin_step(tfim3, state, script_chooser([0, 0, 0]))
        block = nxt.config.blocks[-1]
        assert block.coeff == 0.0
        assert block.monomial.is_identity
        assert nxt.S == frozenset({2})

    def test_double_product_with_empty_samples(self, tfim3, script_chooser):
        state = initial_state(tfim3, 1e-4, 1)
        nxt = pin_step(tfim3, state, script_chooser([0, 0, 5]))
        assert nxt.config.blocks[-1].coeff == 0.0

    def test_needs_restricted_terms(self, tfim3, rng):
        state = initial_state(tfim3, 1e-4, 5)
        with pytest.raises(PreconditionError):
            pin_step(tfim3, state.__class__(frozenset(), state.config, state.gamma, state.beta, 5), rng)

    def test_gamma(self, tfim3):
        assert initial_state(tfim3, 1e-4, None).gamma == pytest.approx(3 / 10)


class TestStepExpectation:
    def test_two_site_coupling_closed_form(self):
        h = Hamiltonian.build([make_term(1.0, "Z0 Z1", 2)], 2, 2)
        beta = 0.5
        state = initial_state(h, beta, 2, check_potential=False)
        _assert_step_mean(h, state)
        # T = (1 + b^2/2) I - b Z0Z1 with b = beta/2, and (Z0Z1)^2 = I
        b = beta / 2
        a0 = 1 + b * b / 2
        branches = enumerate_branches(lambda ch: evaluate_config_dense(pin_step(h, state, ch).config, 2))
        mean = sum(br.probability * br.result for br in branches)
        expected = (a0 * a0 + b * b) * np.eye(4) - 2 * a0 * b * pauli_dense(PauliString.from_label("Z0 Z1", 2))
        assert np.allclose(mean, expected, atol=1e-12)

    def test_single_term_first_step(self, single_term):
        _assert_step_mean(single_term, initial_state(single_term, 0.3, 2, check_potential=False))

    def test_two_bond_chain_both_steps(self, two_bond_chain, rng):
        state = initial_state(two_bond_chain, 0.3, 2, check_potential=False)
        _assert_step_mean(two_bond_chain, state)
        for _ in range(3):
            nxt = pin_step(two_bond_chain, state, rng)
            if two_bond_chain.restricted_terms(nxt.S):
                _assert_step_mean(two_bond_chain, nxt)

    def test_tfim3_second_step(self, tfim3, rng):
        state = initial_state(tfim3, 0.2, 1, check_potential=False)
        seen = 0
        for _ in range(4):
            nxt = pin_step(tfim3, state, rng)
            if tfim3.restricted_terms(nxt.S):
                _assert_step_mean(tfim3, nxt)
                seen += 1
        assert seen > 0


class TestFrontier:
    @pytest.mark.parametrize("family", [ChainTFIM(5), GridZZ(2, 3), HeisenbergChain(4)], ids=["chain", "grid", "heis"])
    def test_only_last_block_meets_unpinned_terms(self, family, rng):
        h = family.build()
        beta = critical_beta(h, BetaMode.SEPARABILITY) / 2
        for _ in range(20):
            state = initial_state(h, beta, None, check_potential=False)
            while h.restricted_terms(state.S):
                state = pin_step(h, state, rng)
                state.config.check_disjoint()
                frontier = h.restricted_terms(state.S)
                reach = set().union(*(h.supports[a] for a in frontier)) if frontier else set()
                for i, block in enumerate(state.config.blocks[:-1]):
                    hit = block.monomial.formal_support & reach
                    assert not hit, f"inactive block {i} meets unpinned terms at sites {sorted(hit)}"


class TestRunPinning:
    def test_zero_terms(self, empty_hamiltonian, rng):
        config = run_separability(empty_hamiltonian, 0.001, rng)
        assert len(config) == 0

    def test_terminates_with_disjoint_blocks(self, tfim4, rng):
        beta = critical_beta(tfim4, BetaMode.SEPARABILITY) / 2
        for _ in range(50):
            config = run_pinning(tfim4, beta, rng, t_max=None, check_potential=True)
            config.check_disjoint()
            assert 1 <= len(config) <= tfim4.n

    def test_potential_holds_below_scale(self, tfim4, rng):
        beta = critical_beta(tfim4, BetaMode.SEPARABILITY) / 4
        state = initial_state(tfim4, beta, None, check_potential=True)
        while tfim4.restricted_terms(state.S):
            state = pin_step(tfim4, state, rng)
            assert potential_violations(tfim4, state) == []

    def test_threshold_gate(self, tfim4, rng):
        beta = 2 * critical_beta(tfim4, BetaMode.SEPARABILITY)
        with pytest.raises(ThresholdError):
            run_separability(tfim4, beta, rng)

    def test_unsafe_override(self, tfim4, rng, caplog):
        beta = 2 * critical_beta(tfim4, BetaMode.SEPARABILITY)
        run_separability(tfim4, beta, rng, unsafe_beta=True)
        assert "above the separability threshold" in caplog.text

    def test_record_keeps_blocks(self, tfim3, rng):
        beta = critical_beta(tfim3, BetaMode.SEPARABILITY) / 2
        config = run_separability(tfim3, beta, rng)
        again = Configuration.from_record(config.to_record(), tfim3)
        assert np.allclose(evaluate_config_dense(again, 3), evaluate_config_dense(config, 3))
