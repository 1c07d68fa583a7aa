"""Random stabilizer product states with mean sigma(X)/tr sigma(X)."""

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from src.core.pauli import AXES, PauliString, support
from src.sampling.pinning import Configuration
from src.utils.errors import DimensionError, InvalidInputError, InvariantError
from src.utils.randomness import as_chooser

PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class ProductState:
    """One single-qubit stabilizer state per site, as (axis, sign)."""

    sites: tuple[tuple[str, int], ...]

    @property
    def n(self) -> int:
        return len(self.sites)

    def to_record(self, seed=None) -> dict:
        return {
            "seed": seed,
            "sites": [{"axis": axis, "sign": sign} for axis, sign in self.sites],
        }

    @classmethod
    def from_record(cls, record: dict) -> "ProductState":
        return cls(tuple((s["axis"], int(s["sign"])) for s in record["sites"]))


def _mixed_site(chooser) -> tuple[str, int]:
    axis = AXES[chooser.uniform(3)]
    sign = 1 if chooser.uniform(2) == 0 else -1
    return axis, sign


def sample_state(config: Configuration, n: int, rng) -> ProductState:
    """Draw a product state whose expected density is sigma(X)/tr sigma(X).

    Per block with value r * P: with probability |c r| the sites of P get
    the eigenstates of a uniformly random sign string whose product is
    sign(c r); otherwise they stay maximally mixed. Every other site is a
    uniform draw over the six single-qubit stabilizer states.
    """
    chooser = as_chooser(rng)
    assigned: list[tuple[str, int] | None] = [None] * n
    for i, block in enumerate(config.blocks):
        m = block.monomial
        if any(s >= n for s in m.formal_support):
            raise DimensionError(f"block {i} reaches beyond n={n}")
        if m.is_zero or m.is_identity:
            continue
        weight = block.scaled_coeff
        p = abs(weight)
        if p > 1.0 + PROBABILITY_TOL:
            raise InvariantError(f"block {i}: |c r| = {p:.6g} exceeds 1")
        if not chooser.coin(min(p, 1.0)):
            continue
        pauli = m.value.pauli.string
        sites = sorted(support(pauli))
        signs = [1 if chooser.uniform(2) == 0 else -1 for _ in sites[:-1]]
        parity = 1 if weight > 0 else -1
        for s in signs:
            parity *= s
        signs.append(parity)
        for site, sign in zip(sites, signs):
            assigned[site] = (pauli.axis(site), sign)

    for site in range(n):
        if assigned[site] is None:
            assigned[site] = _mixed_site(chooser)
    return ProductState(tuple(assigned))


def pauli_expectation(state: ProductState, pauli: PauliString) -> float:
    """<psi| P |psi> for a Hermitian Pauli string P: +-1 or 0."""
    if pauli.n != state.n:
        raise DimensionError(f"observable on {pauli.n} sites, state on {state.n}")
    if not pauli.is_hermitian:
        raise InvalidInputError(f"{pauli.label()} is not Hermitian")
    value = 1 if pauli.phase_exp == 0 else -1
    for site in support(pauli):
        axis, sign = state.sites[site]
        if axis != pauli.axis(site):
            return 0.0
        value *= sign
    return float(value)


def estimate_observable(states: Iterable[ProductState], pauli: PauliString) -> tuple[float, float]:
    """Sample mean of <P> over product states and its standard error."""
    values = np.array([pauli_expectation(s, pauli) for s in states], dtype=float)
    if values.size == 0:
        raise InvalidInputError("no samples")
    se = values.std(ddof=1) / np.sqrt(values.size) if values.size > 1 else float("inf")
    return float(values.mean()), float(se)
