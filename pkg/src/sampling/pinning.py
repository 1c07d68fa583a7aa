"""Site pinning: configurations whose expected operator is e^{-beta H}.

A configuration is a list of blocks (c_i, X_i) with disjoint formal supports;
it stands for sigma(X) = prod_i (I + c_i X_i). Each X_i is a Hermitian
monomial, evaluated eagerly to ZERO or r * P with P a bare Pauli string.

One pin step peels the terms around one term a* off the restricted Gibbs
exponential, multiplying the last block by a sampled propagator on both
sides, then removes supp(a*) from the unpinned set S.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from src.core.hamiltonian import BetaMode, Hamiltonian, critical_beta, potential_beta
from src.core.pauli import (
    ZERO,
    PauliString,
    ScaledPauli,
    SignedPauli,
    ZeroOperator,
    dagger,
    hermitian_part,
    multiply_all,
    pauli_mul,
)
from src.sampling.monomial_sampler import MonomialSample, sample_propagator
from src.utils.errors import InvalidInputError, InvariantError, PreconditionError, ThresholdError
from src.utils.randomness import as_chooser

logger = logging.getLogger(__name__)

POTENTIAL_TOL = 1e-9


@dataclass(frozen=True)
class HermitianMonomial:
    value: ZeroOperator | ScaledPauli
    degree: int
    term_multiset: tuple[int, ...]
    formal_support: frozenset[int]

    @classmethod
    def identity(cls, n: int) -> "HermitianMonomial":
        return cls(ScaledPauli(1.0, SignedPauli(PauliString.identity(n))), 0, (), frozenset())

    @property
    def is_zero(self) -> bool:
        return self.value is ZERO

    @property
    def is_identity(self) -> bool:
        return not self.is_zero and self.value.pauli.string.is_identity

    def to_record(self) -> dict:
        if self.is_zero:
            value = {"zero": True}
        else:
            value = {"r": self.value.coeff, "pauli": self.value.pauli.label()}
        return {"degree": self.degree, "terms": list(self.term_multiset), "value": value}


@dataclass(frozen=True)
class Block:
    coeff: float
    monomial: HermitianMonomial

    @property
    def scaled_coeff(self) -> float:
        """c * r, or 0 for a zero monomial."""
        if self.monomial.is_zero:
            return 0.0
        return self.coeff * self.monomial.value.coeff

    def to_record(self) -> dict:
        return {"c": self.coeff, **self.monomial.to_record()}


@dataclass(frozen=True)
class Configuration:
    blocks: tuple[Block, ...] = ()

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def formal_support(self) -> frozenset[int]:
        out: set[int] = set()
        for b in self.blocks:
            out.update(b.monomial.formal_support)
        return frozenset(out)

    def check_disjoint(self) -> None:
        seen: set[int] = set()
        for i, b in enumerate(self.blocks):
            overlap = seen & b.monomial.formal_support
            if overlap:
                raise InvariantError(f"block {i} overlaps earlier blocks on sites {sorted(overlap)}")
            seen |= b.monomial.formal_support

    def to_record(self) -> list[dict]:
        return [b.to_record() for b in self.blocks]

    @classmethod
    def from_record(cls, records: list[dict], h: Hamiltonian) -> "Configuration":
        blocks = []
        for rec in records:
            terms = tuple(rec["terms"])
            value = rec["value"]
            if value.get("zero"):
                val = ZERO
            else:
                p = PauliString.from_label(value["pauli"], h.n)
                val = ScaledPauli(float(value["r"]), SignedPauli.of(p))
            blocks.append(
                Block(float(rec["c"]), HermitianMonomial(val, int(rec["degree"]), terms, h.terms_support(terms)))
            )
        return cls(tuple(blocks))


@dataclass(frozen=True)
class PinState:
    S: frozenset[int]
    config: Configuration
    gamma: float
    beta: float
    t_max: int | None
    check_potential: bool = field(default=False, compare=False)


def initial_state(h: Hamiltonian, beta: float, t_max: int | None, check_potential: bool | None = None) -> PinState:
    """Root state: every site unpinned, empty configuration, gamma = 3/(5K)."""
    if check_potential is None:
        check_potential = beta <= potential_beta(h)
    return PinState(frozenset(range(h.n)), Configuration(), 3.0 / (5 * h.locality), beta, t_max, check_potential)


def _product(h: Hamiltonian, sample: MonomialSample) -> tuple[float, PauliString]:
    """E = H_{b_1} ... H_{b_t} as (prod lambda, phased Pauli product)."""
    lam = math.prod(h.terms[b].coeff for b in sample.term_list)
    return lam, multiply_all(h.n, (h.terms[b].string for b in sample.term_list))


def _monomial(h: Hamiltonian, value, terms: tuple[int, ...]) -> HermitianMonomial:
    terms = tuple(sorted(terms))
    return HermitianMonomial(value, len(terms), terms, h.terms_support(terms))


def pin_step(h: Hamiltonian, state: PinState, rng) -> PinState:
    """Pin the sites of one term a* and update the last block.

    Args:
        h: Full Hamiltonian
        state: Current unpinned set and configuration
        rng: Chooser, numpy Generator or seed

    Returns:
        The next state, with supp(a*) removed from S
    """
    chooser = as_chooser(rng)
    restricted = h.restricted_terms(state.S)
    if not restricted:
        raise PreconditionError("pin_step needs a nonempty restricted term set")

    blocks = list(state.config.blocks)
    candidates = ()
    if blocks:
        touched = blocks[-1].monomial.formal_support
        candidates = tuple(a for a in restricted if h.supports[a] & touched)
    if candidates:
        a_star = candidates[0]
    else:
        blocks.append(Block(0.0, HermitianMonomial.identity(h.n)))
        a_star = restricted[0]

    inside = set(restricted)
    Q = tuple(a for a in h.localized_terms(h.supports[a_star]) if a in inside)
    s1 = sample_propagator(h, Q, state.beta / 2, state.t_max, chooser, active=restricted)
    s2 = sample_propagator(h, Q, state.beta / 2, state.t_max, chooser, active=restricted)
    gamma = state.gamma
    xi = chooser.pick([1.0 - gamma] + [gamma / 6.0] * 6)

    c = blocks[-1].coeff
    X = blocks[-1].monomial
    b1, b2 = s1.coeff, s2.coeff
    lam1, P1 = _product(h, s1)
    lam2, P2 = _product(h, s2)
    w = 6.0 / gamma

    def with_x(alpha: float, build):
        # X-dependent cases vanish when X evaluated to zero.
        if X.is_zero:
            return ZERO
        r, P = X.value.coeff, X.value.pauli.string
        return hermitian_part(alpha * r, build(P))

    match xi:
        case 0:
            new = Block(c / (1.0 - gamma), X)
        case 1:
            new = Block(w * b1, _monomial(h, hermitian_part(lam1, P1), s1.term_list))
        case 2:
            new = Block(w * b2, _monomial(h, hermitian_part(lam2, P2), s2.term_list))
        case 3:
            value = with_x(lam1, lambda P: pauli_mul(dagger(P1), P))
            new = Block(w * c * b1, _monomial(h, value, X.term_multiset + s1.term_list))
        case 4:
            value = with_x(lam2, lambda P: pauli_mul(dagger(P2), P))
            new = Block(w * c * b2, _monomial(h, value, X.term_multiset + s2.term_list))
        case 5:
            value = hermitian_part(lam1 * lam2, pauli_mul(dagger(P2), P1))
            new = Block(w * b1 * b2, _monomial(h, value, s1.term_list + s2.term_list))
        case 6:
            value = with_x(lam1 * lam2, lambda P: pauli_mul(pauli_mul(dagger(P2), P), P1))
            new = Block(w * c * b1 * b2, _monomial(h, value, X.term_multiset + s1.term_list + s2.term_list))

    if not math.isfinite(new.coeff):
        raise InvariantError(f"block coefficient overflowed ({new.coeff})")
    blocks[-1] = new
    S_next = state.S - h.supports[a_star]
    nxt = replace(state, S=S_next, config=Configuration(tuple(blocks)))
    logger.debug(
        "pin a*=%d xi=%d t=(%d,%d) c=%.3g |S|=%d", a_star, xi, s1.t, s2.t, new.coeff, len(S_next)
    )
    if state.check_potential:
        violations = potential_violations(h, nxt)
        if violations:
            raise InvariantError(f"coefficient potential violated by blocks {violations}")
    return nxt


def potential_violations(h: Hamiltonian, state: PinState) -> list[int]:
    """Blocks breaking |c| <= (1-gamma)^{|S ∩ supp|} (beta/beta_pot)^t."""
    ratio = state.beta / potential_beta(h)
    bad = []
    for i, b in enumerate(state.config.blocks):
        m = b.monomial
        bound = (1.0 - state.gamma) ** len(state.S & m.formal_support) * ratio**m.degree
        if abs(b.coeff) > bound * (1 + POTENTIAL_TOL):
            bad.append(i)
    return bad


def run_pinning(h: Hamiltonian, beta: float, rng, t_max: int | None = None, check_potential: bool | None = None) -> Configuration:
    """Pin until no term fits inside the unpinned set; no threshold gate."""
    chooser = as_chooser(rng)
    state = initial_state(h, beta, t_max, check_potential)
    while h.restricted_terms(state.S):
        before = len(state.S)
        state = pin_step(h, state, chooser)
        if len(state.S) >= before:
            raise InvariantError("pin step did not shrink the unpinned set")
    return state.config


def check_separability_beta(h: Hamiltonian, beta: float, unsafe_beta: bool = False) -> None:
    threshold = critical_beta(h, BetaMode.SEPARABILITY)
    if beta < 0:
        raise InvalidInputError(f"beta must be >= 0, got {beta}")
    if beta == threshold:
        logger.warning("beta equals the separability threshold %.6g; the guarantee is strict", threshold)
    elif beta > threshold:
        if not unsafe_beta:
            raise ThresholdError(beta, threshold, BetaMode.SEPARABILITY.value)
        logger.warning("running above the separability threshold (beta=%.6g > %.6g)", beta, threshold)


def run_separability(h: Hamiltonian, beta: float, rng, unsafe_beta: bool = False) -> Configuration:
    """Exact-series pinning: E[sigma(X)] = e^{-beta H}."""
    check_separability_beta(h, beta, unsafe_beta)
    return run_pinning(h, beta, rng, t_max=None)


def evaluate_config_dense(config: Configuration, n: int) -> np.ndarray:
    """Dense sigma(X) = prod_i (I + c_i r_i P_i)."""
    from src.oracle.exact_oracle import check_dense_size, pauli_dense

    check_dense_size(n)
    config.check_disjoint()
    dim = 1 << n
    out = np.eye(dim, dtype=complex)
    for b in config.blocks:
        if b.monomial.is_zero:
            continue
        out = out @ (np.eye(dim) + b.scaled_coeff * pauli_dense(b.monomial.value.pauli.string))
    return out


def config_trace(config: Configuration, n: int) -> float:
    """tr sigma(X) over n sites without materializing it."""
    total = 2.0**n
    for b in config.blocks:
        if b.monomial.is_identity:
            total *= 1.0 + b.scaled_coeff
    return total


def block_trace(block: Block) -> float:
    """tr(I + cX) over the block's formal support."""
    s = len(block.monomial.formal_support)
    if block.monomial.is_identity:
        return 2.0**s * (1.0 + block.scaled_coeff)
    return 2.0**s
