"""Choice-point randomness shared by every sampler.

Samplers never call a random generator directly. They ask a ``Chooser`` for
an index among weighted options. This gives three interchangeable drivers:

- ``RngChooser`` draws from a ``numpy.random.Generator`` (normal runs).
- ``RecordingChooser`` wraps another chooser and keeps the transcript, which
  identifies a child in the sample tree.
- ``enumerate_branches`` replays a sampler over every choice sequence and
  returns each outcome with its exact probability.
"""

from abc import ABC, abstractmethod
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, ResourceError


class Chooser(ABC):
    """Source of discrete random choices."""

    @abstractmethod
    def pick(self, probs: Sequence[float]) -> int:
        """Return index i with probability probs[i]."""
        ...

    def uniform(self, k: int) -> int:
        if k <= 0:
            raise InvalidInputError(f"uniform choice over {k} options")
        return self.pick([1.0 / k] * k)

    def coin(self, p: float) -> bool:
        return self.pick([1.0 - p, p]) == 1


class RngChooser(Chooser):
    """Chooser backed by a numpy Generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def pick(self, probs: Sequence[float]) -> int:
        u = self.rng.random()
        acc = 0.0
        last = 0
        for i, p in enumerate(probs):
            if p <= 0.0:
                continue
            last = i
            acc += p
            if u < acc:
                return i
        return last

    def uniform(self, k: int) -> int:
        if k <= 0:
            raise InvalidInputError(f"uniform choice over {k} options")
        return int(self.rng.integers(k))

    def coin(self, p: float) -> bool:
        return bool(self.rng.random() < p)


class RecordingChooser(Chooser):
    """Delegate to ``inner`` and keep (index, probability) of every choice."""

    def __init__(self, inner: Chooser):
        self.inner = inner
        self.transcript: list[int] = []
        self.probability = 1.0

    def pick(self, probs: Sequence[float]) -> int:
        i = self.inner.pick(probs)
        self.transcript.append(i)
        self.probability *= probs[i]
        return i

    def uniform(self, k: int) -> int:
        i = self.inner.uniform(k)
        self.transcript.append(i)
        self.probability /= k
        return i

    def coin(self, p: float) -> bool:
        heads = self.inner.coin(p)
        self.transcript.append(int(heads))
        self.probability *= p if heads else 1.0 - p
        return heads

    def key(self) -> tuple[int, ...]:
        return tuple(self.transcript)


class _ScriptedChooser(Chooser):
    """Follows a fixed prefix of choices, then always takes the first live option."""

    def __init__(self, script: list[int]):
        self.script = script
        self.options: list[Sequence[float]] = []
        self.probability = 1.0

    def pick(self, probs: Sequence[float]) -> int:
        depth = len(self.options)
        if depth < len(self.script):
            i = self.script[depth]
        else:
            i = _next_live(probs, -1)
            if i is None:
                raise InvalidInputError("choice point with no positive-probability option")
            self.script.append(i)
        self.options.append(list(probs))
        self.probability *= probs[i]
        return i


def _next_live(probs: Sequence[float], after: int) -> int | None:
    for j in range(after + 1, len(probs)):
        if probs[j] > 0.0:
            return j
    return None


class Branch(NamedTuple):
    probability: float
    transcript: tuple[int, ...]
    result: Any


def enumerate_branches(
    fn: Callable[[Chooser], Any], max_branches: int = 1_000_000
) -> list[Branch]:
    """Run ``fn`` once per choice sequence with positive probability.

    ``fn`` must be deterministic given its choices. Transcripts use the same
    indices a ``RecordingChooser`` would record, so they can be matched
    against keys produced during a real run.
    """
    branches: list[Branch] = []
    script: list[int] = []
    while True:
        chooser = _ScriptedChooser(script)
        result = fn(chooser)
        branches.append(Branch(chooser.probability, tuple(script), result))
        if len(branches) > max_branches:
            raise ResourceError(f"branch enumeration exceeded {max_branches} branches")

        # Backtrack to the deepest choice point with an untried live option.
        options = chooser.options
        depth = len(script) - 1
        while depth >= 0:
            nxt = _next_live(options[depth], script[depth])
            if nxt is not None:
                script = script[:depth] + [nxt]
                break
            depth -= 1
        if depth < 0:
            return branches


def as_chooser(rng: "Chooser | np.random.Generator | int | None") -> Chooser:
    """Accept a Chooser, a numpy Generator, or a seed."""
    if isinstance(rng, Chooser):
        return rng
    if isinstance(rng, np.random.Generator):
        return RngChooser(rng)
    return RngChooser(np.random.default_rng(rng))


def sample_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for sample ``index``: SeedSequence([master_seed, index])."""
    return np.random.SeedSequence([master_seed, index])


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(sample_seed(master_seed, index))
