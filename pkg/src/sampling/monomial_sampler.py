"""Unbiased single-monomial samplers for the propagator series.

f_0 = I and f_{t+1} = -[H, f_t] - f_t H^(Q), so that

    e^{-beta H} e^{beta (H - H^(Q))} = sum_t beta^t / t! f_t(H, H^(Q)).

``sample_f_k`` returns (c, b) with E[c H_{b_1} ... H_{b_k}] = f_k, and
``sample_propagator`` returns (c, b) with E[I + c E] equal to the series
truncated at t_max. ``active`` restricts H to a sub-Hamiltonian (the pinning
step runs on H^(S)); Q must be a subset of it.
"""

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from src.core.hamiltonian import Hamiltonian, TermSet
from src.utils.errors import InvalidInputError, InvariantError
from src.utils.randomness import as_chooser


@dataclass(frozen=True)
class MonomialSample:
    coeff: float
    term_list: TermSet

    @property
    def t(self) -> int:
        return len(self.term_list)

    def to_record(self) -> dict:
        return {"coeff": self.coeff, "terms": list(self.term_list)}


def _guard(coeff: float) -> float:
    if not math.isfinite(coeff):
        raise InvariantError(f"monomial coefficient overflowed ({coeff})")
    return coeff


def sample_f_k(
    h: Hamiltonian,
    Q: Iterable[int],
    k: int,
    rng,
    active: Iterable[int] | None = None,
) -> MonomialSample:
    """Sample one monomial of f_k(H, H^(Q)).

    Args:
        h: Hamiltonian whose terms are indexed
        Q: Term indices of H^(Q)
        k: Degree, k >= 0
        rng: Chooser, numpy Generator or seed
        active: Terms forming H (defaults to all of h)

    Returns:
        MonomialSample with exactly k terms
    """
    chooser = as_chooser(rng)
    Q = tuple(sorted(set(Q)))
    if k < 0:
        raise InvalidInputError(f"k must be >= 0, got {k}")
    if k >= 1 and not Q:
        raise InvalidInputError("f_k with k >= 1 needs a nonempty Q")
    active_set = None if active is None else frozenset(active)

    coeff = 1.0
    terms: list[int] = []
    # Closed neighbourhood of the current multiset, kept incrementally.
    reach: set[int] = set()
    for t in range(k):
        if chooser.coin(t / (t + 1)):
            region = sorted(reach)
            a = region[chooser.uniform(len(region))]
            prepend = chooser.uniform(2) == 1
            coeff *= (t + 1) * 2 * len(region) / t
            if prepend:
                coeff = -coeff
                terms.insert(0, a)
            else:
                terms.append(a)
        else:
            a = Q[chooser.uniform(len(Q))]
            coeff *= -(t + 1) * len(Q)
            terms.append(a)
        coeff = _guard(coeff)
        for b in (a, *h.dual_adjacency[a]):
            if active_set is None or b in active_set:
                reach.add(b)
    return MonomialSample(coeff, tuple(terms))


def _draw_degree(chooser, t_max: int | None) -> int:
    if t_max is None:
        t = 1
        while chooser.coin(0.5):
            t += 1
        return t
    probs = [2.0**-t_max] + [2.0**-t for t in range(1, t_max + 1)]
    return chooser.pick(probs)


def sample_propagator(
    h: Hamiltonian,
    Q: Iterable[int],
    beta: float,
    t_max: int | None,
    rng,
    active: Iterable[int] | None = None,
) -> MonomialSample:
    """Sample (c, b) with E[I + c H_b] = T_{t_max, beta}(H, H^(Q)).

    ``t_max=None`` is the untruncated series: t >= 1 is geometric with
    P(t) = 2^-t.
    """
    if beta < 0:
        raise InvalidInputError(f"beta must be >= 0, got {beta}")
    if t_max is not None and t_max < 1:
        raise InvalidInputError(f"t_max must be >= 1 or unbounded, got {t_max}")
    chooser = as_chooser(rng)
    t = _draw_degree(chooser, t_max)
    if t == 0:
        return MonomialSample(0.0, ())
    inner = sample_f_k(h, Q, t, chooser, active)
    scale = (2.0 * beta) ** t / math.factorial(t)
    return MonomialSample(_guard(inner.coeff * scale), inner.term_list)


def f_k_bound(h: Hamiltonian, q_size: int, t: int) -> float:
    """t! * max(2(Δ+1), |Q|)^t."""
    return math.factorial(t) * max(2 * (h.degree + 1), q_size) ** t


def propagator_bound(h: Hamiltonian, q_size: int, beta: float, t: int) -> float:
    """(2 beta max(2(Δ+1), |Q|))^t."""
    return (2 * beta * max(2 * (h.degree + 1), q_size)) ** t


def series_mass_bound(h: Hamiltonian, q_size: int, t: int) -> float:
    """prod_{s=1}^t (|Q| + 2(Δ+1)s), the l1 mass of the degree-t coefficients."""
    return math.prod(q_size + 2 * (h.degree + 1) * s for s in range(1, t + 1))


def default_t_max(n: int, epsilon: float) -> int | None:
    """ceil(10 ln(n/eps)); unbounded for eps = 0."""
    if epsilon == 0:
        return None
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be >= 0, got {epsilon}")
    return max(1, math.ceil(10 * math.log(max(n, 1) / epsilon)))


def monomial_dense(h: Hamiltonian, term_list: Iterable[int]) -> np.ndarray:
    """Dense H_{b_1} ... H_{b_t}, coefficients included."""
    from src.oracle.exact_oracle import pauli_dense

    dim = 1 << h.n
    out = np.eye(dim, dtype=complex)
    for b in term_list:
        out = out @ (h.terms[b].coeff * pauli_dense(h.terms[b].string))
    return out


def f_k_dense(h: Hamiltonian, Q: Iterable[int], k: int, active: Iterable[int] | None = None) -> np.ndarray:
    """f_k(H, H^(Q)) by iterating the recurrence densely."""
    from src.oracle.exact_oracle import hamiltonian_dense

    H = hamiltonian_dense(h, None if active is None else sorted(set(active)))
    HQ = hamiltonian_dense(h, sorted(set(Q)))
    f = np.eye(1 << h.n, dtype=complex)
    for _ in range(k):
        f = -(H @ f - f @ H) - f @ HQ
    return f


def truncated_series_dense(
    h: Hamiltonian,
    Q: Iterable[int],
    beta: float,
    t_max: int,
    active: Iterable[int] | None = None,
) -> np.ndarray:
    """T_{t_max, beta} = sum_{t <= t_max} beta^t/t! f_t, densely."""
    from src.oracle.exact_oracle import check_dense_size, hamiltonian_dense

    check_dense_size(h.n)
    H = hamiltonian_dense(h, None if active is None else sorted(set(active)))
    HQ = hamiltonian_dense(h, sorted(set(Q)))
    f = np.eye(1 << h.n, dtype=complex)
    total = f.copy()
    for t in range(1, t_max + 1):
        f = -(H @ f - f @ H) - f @ HQ
        total = total + (beta**t / math.factorial(t)) * f
    return total
