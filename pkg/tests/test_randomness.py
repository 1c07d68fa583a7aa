import numpy as np
import pytest

from src.utils.errors import InvalidInputError, ResourceError
from src.utils.randomness import (
    RecordingChooser,
    RngChooser,
    as_chooser,
    enumerate_branches,
    sample_rng,
)


def _two_coins(ch):
    first = ch.coin(0.25)
    second = ch.uniform(3) if first else -1
    return first, second


class TestEnumerateBranches:
    def test_probabilities_sum_to_one(self):
        branches = enumerate_branches(_two_coins)
        total = sum(b.probability for b in branches)
        assert abs(total - 1.0) < 1e-12, f"branch mass {total}"
        assert len(branches) == 4, f"expected 1 + 3 branches, got {len(branches)}"

    def test_zero_probability_options_skipped(self):
        branches = enumerate_branches(lambda ch: ch.pick([0.0, 1.0, 0.0]))
        assert [b.result for b in branches] == [1]

    def test_branch_cap(self):
        with pytest.raises(ResourceError):
            enumerate_branches(lambda ch: [ch.uniform(4) for _ in range(4)], max_branches=10)

    def test_transcripts_match_recording(self):
        rec = RecordingChooser(RngChooser(np.random.default_rng(3)))
        result = _two_coins(rec)
        keyed = {b.transcript: b for b in enumerate_branches(_two_coins)}
        assert rec.key() in keyed, f"transcript {rec.key()} not among enumerated branches"
        assert keyed[rec.key()].result == result
        assert abs(keyed[rec.key()].probability - rec.probability) < 1e-12


class TestChoosers:
    def test_uniform_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            RngChooser(np.random.default_rng(0)).uniform(0)

    def test_pick_never_returns_zero_weight(self):
        ch = RngChooser(np.random.default_rng(0))
        picks = {ch.pick([0.0, 0.5, 0.0, 0.5]) for _ in range(200)}
        assert picks <= {1, 3}, f"picked {picks}"

    def test_as_chooser(self):
        ch = RngChooser(np.random.default_rng(0))
        assert as_chooser(ch) is ch
        assert isinstance(as_chooser(np.random.default_rng(1)), RngChooser)
        assert isinstance(as_chooser(7), RngChooser)

    def test_sample_rng_is_reproducible(self):
        a = sample_rng(42, 5).random(4)
        b = sample_rng(42, 5).random(4)
        c = sample_rng(42, 6).random(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
