"""High-temperature estimate of log tr e^{-beta H} from the polymer expansion.

Polymers are nonempty multisets of term indices whose distinct terms are
connected on the dual graph. Two polymers are incompatible when they share
a term or contain neighbouring terms. The log-partition function is

    n ln 2 + sum over clusters of phi(incompatibility graph) * prod w_gamma

and every cluster with total size <= k is summed exactly.

Clusters are produced by grouping: the multiset union of a cluster is itself
a polymer, so each polymer V of size <= k is split into every multiset
partition of connected parts, keeping partitions whose incompatibility
graph is connected.
"""

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator

import networkx as nx

from src.core.hamiltonian import BetaMode, Hamiltonian, beta_star, critical_beta, polymer_beta
from src.core.pauli import multiply_all, normalized_trace
from src.utils.errors import InvalidInputError, InvariantError, ResourceError, ThresholdError

logger = logging.getLogger(__name__)

W_MAX = 8
URSELL_MAX_VERTICES = 9
MAX_CLUSTERS = 2_000_000

Polymer = tuple[int, ...]


@dataclass(frozen=True)
class ClusterTuple:
    """Unordered multiset of polymers plus the number of orderings it stands for."""

    polymers: tuple[Polymer, ...]
    orderings: int
    graph: nx.Graph

    @property
    def size(self) -> int:
        return sum(len(p) for p in self.polymers)


@dataclass(frozen=True)
class LogZEstimate:
    z_hat: float
    beta: float
    eta: float
    k_used: int
    k_requested: int
    cluster_count: int
    truncation_bound: float
    elapsed: float

    @property
    def capped(self) -> bool:
        return self.k_used < self.k_requested

    def to_record(self) -> dict:
        return {
            "beta": self.beta,
            "eta": self.eta,
            "k_used": self.k_used,
            "z_hat": self.z_hat,
            "cluster_count": self.cluster_count,
            "elapsed": self.elapsed,
        }


# --------------------------------------------------------------------------- #
# Polymers


def _connected_subsets(h: Hamiltonian, max_size: int, terms: Iterable[int] | None) -> list[frozenset[int]]:
    allowed = set(range(h.m)) if terms is None else set(terms)
    found: set[frozenset[int]] = {frozenset([a]) for a in allowed}
    frontier = list(found)
    for _ in range(max_size - 1):
        grown = []
        for subset in frontier:
            boundary = {b for a in subset for b in h.dual_adjacency[a] if b in allowed} - subset
            for b in boundary:
                bigger = subset | {b}
                if bigger not in found:
                    found.add(bigger)
                    grown.append(bigger)
        frontier = grown
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def _multiplicities(k: int, total: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples of positive integers with sum <= total."""
    if k == 0:
        yield ()
        return
    for first in range(1, total - (k - 1) + 1):
        for rest in _multiplicities(k - 1, total - first):
            yield (first, *rest)


def enumerate_polymers(h: Hamiltonian, w_max: int, terms: Iterable[int] | None = None) -> list[Polymer]:
    """Every polymer of size <= w_max, as a sorted tuple of term indices."""
    polymers = []
    for subset in _connected_subsets(h, w_max, terms):
        base = sorted(subset)
        for mult in _multiplicities(len(base), w_max):
            polymers.append(tuple(a for a, m in zip(base, mult) for _ in range(m)))
    polymers.sort(key=lambda p: (len(p), p))
    return polymers


def polymer_count_bound(delta: int, w: int) -> float:
    """Upper bound on #{gamma : a in gamma, |gamma| = w} in a graph of degree delta.

    For delta >= 2 this is e(1 + e(delta-1))^{w-1}. For delta <= 1 the
    closed form undercounts (two adjacent terms already give w polymers), so
    the exact connected-subgraph sum it is derived from is used instead.
    """
    if delta >= 2:
        return math.e * (1 + math.e * (delta - 1)) ** (w - 1)
    if delta == 0 or w == 1:
        return 1.0
    # {a} alone, or a with its single neighbour: 1 + (w - 1) multiplicity splits.
    return float(w)


def _distinct_permutations(items: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    counts = Counter(items)
    keys = sorted(counts)
    n = len(items)
    out: list[int] = []

    def rec():
        if len(out) == n:
            yield tuple(out)
            return
        for key in keys:
            if counts[key]:
                counts[key] -= 1
                out.append(key)
                yield from rec()
                out.pop()
                counts[key] += 1

    yield from rec()


def polymer_weight(h: Hamiltonian, gamma: Polymer, beta: float, w_max: int = W_MAX) -> float:
    """w_gamma = (-beta)^{|gamma|}/(|gamma|! gamma!) ntr(sum_sigma prod E) lambda^gamma.

    The sum over all |gamma|! orderings equals gamma! times the sum over
    distinct orderings, which is what is enumerated.
    """
    size = len(gamma)
    if size == 0:
        raise InvalidInputError("polymers are nonempty")
    if size > w_max:
        raise ResourceError(f"polymer size {size} exceeds w_max={w_max}", achieved=size)

    x = z = 0
    for a in gamma:
        x ^= h.terms[a].string.x_bits
        z ^= h.terms[a].string.z_bits
    if x or z:
        return 0.0

    re = im = 0
    for order in _distinct_permutations(tuple(gamma)):
        tr = normalized_trace(multiply_all(h.n, (h.terms[a].string for a in order)))
        re += int(tr.real)
        im += int(tr.imag)
    if im != 0:
        raise InvariantError(f"symmetrized trace of {gamma} is not real ({re}+{im}i)")
    lam = math.prod(h.terms[a].coeff for a in gamma)
    return (-beta) ** size / math.factorial(size) * re * lam


def incompatible(h: Hamiltonian, g1: Polymer, g2: Polymer) -> bool:
    """Distance at most one on the dual graph."""
    s2 = set(g2)
    for a in set(g1):
        if a in s2 or any(b in s2 for b in h.dual_adjacency[a]):
            return True
    return False


# --------------------------------------------------------------------------- #
# Ursell function


def ursell(g: nx.Graph, max_vertices: int = URSELL_MAX_VERTICES) -> Fraction:
    """phi(G) = (1/|V|!) sum over spanning connected edge sets A of (-1)^|A|."""
    k = g.number_of_nodes()
    if k > max_vertices:
        raise ResourceError(f"Ursell function limited to {max_vertices} vertices, got {k}")
    if k == 0:
        return Fraction(0)
    index = {v: i for i, v in enumerate(g.nodes)}
    adj = [0] * k
    for u, v in g.edges:
        if u == v:
            continue
        adj[index[u]] |= 1 << index[v]
        adj[index[v]] |= 1 << index[u]
    return Fraction(_connected_signed_count(k, tuple(adj)), math.factorial(k))


@lru_cache(maxsize=4096)
def _connected_signed_count(k: int, adj: tuple[int, ...]) -> int:
    """sum over spanning connected A of (-1)^|A|, via the component of the lowest vertex.

    Every edge set on U splits by the component W of min(U), so
    F(U) = sum_{W} C(W) F(U minus W), where F(U) = sum_{A in E(U)} (-1)^|A|
    is 1 when U spans no edge and 0 otherwise.
    """

    def no_edges(mask: int) -> bool:
        m = mask
        while m:
            low = m & -m
            if adj[low.bit_length() - 1] & mask:
                return False
            m ^= low
        return True

    memo: dict[int, int] = {}

    def connected(mask: int) -> int:
        if mask in memo:
            return memo[mask]
        low = mask & -mask
        if mask == low:
            memo[mask] = 1
            return 1
        total = 1 if no_edges(mask) else 0
        rest = mask ^ low
        sub = (rest - 1) & rest
        # Proper subsets W of mask containing the lowest vertex.
        while True:
            w = sub | low
            if w != mask:
                remainder = mask ^ w
                if no_edges(remainder):
                    total -= connected(w)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        memo[mask] = total
        return total

    # F(remainder) is 0 or 1 exactly, so the recursion only needs edge-free remainders.
    return connected((1 << k) - 1)


# --------------------------------------------------------------------------- #
# Clusters


def _set_partitions(items: list[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def _is_connected_multiset(h: Hamiltonian, polymer: Polymer) -> bool:
    distinct = set(polymer)
    if len(distinct) == 1:
        return True
    return nx.is_connected(h.dual_graph(distinct))


def _cluster_graph(h: Hamiltonian, polymers: tuple[Polymer, ...]) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(len(polymers)))
    for i, j in combinations(range(len(polymers)), 2):
        if incompatible(h, polymers[i], polymers[j]):
            g.add_edge(i, j)
    return g


def _orderings(polymers: tuple[Polymer, ...]) -> int:
    counts = Counter(polymers)
    return math.factorial(len(polymers)) // math.prod(math.factorial(c) for c in counts.values())


def clusters_with_union(h: Hamiltonian, union: Polymer) -> Iterator[ClusterTuple]:
    """Clusters whose polymers add up to the multiset ``union``."""
    seen: set[tuple[Polymer, ...]] = set()
    for partition in _set_partitions(list(range(len(union)))):
        polymers = tuple(sorted(tuple(sorted(union[i] for i in part)) for part in partition))
        if polymers in seen:
            continue
        seen.add(polymers)
        if not all(_is_connected_multiset(h, p) for p in polymers):
            continue
        g = _cluster_graph(h, polymers)
        if nx.is_connected(g):
            yield ClusterTuple(polymers, _orderings(polymers), g)


def enumerate_clusters(h: Hamiltonian, d: int, terms: Iterable[int] | None = None) -> Iterator[ClusterTuple]:
    """Every cluster of total size <= d (unordered, with its ordering count)."""
    if d < 1:
        raise InvalidInputError(f"cluster size bound must be >= 1, got {d}")
    for union in enumerate_polymers(h, d, terms):
        yield from clusters_with_union(h, union)


# --------------------------------------------------------------------------- #
# Estimator


def truncation_order(n: int, beta: float, eta: float, delta: int) -> int:
    """k = floor(log(n/((1 - r) eta)) / log(1/r)), r = beta/beta_*."""
    r = beta / beta_star(delta)
    if not 0 < r < 1:
        raise InvalidInputError(f"beta={beta} outside the convergent range (0, {beta_star(delta):.4g})")
    return max(0, math.floor(math.log(n / ((1 - r) * eta)) / math.log(1 / r)))


def truncation_error(n: int, beta: float, k: int, delta: int) -> float:
    """n r^{k+1}/(1 - r)."""
    r = beta / beta_star(delta)
    return n * r ** (k + 1) / (1 - r)


def log_partition_report(
    h: Hamiltonian,
    beta: float,
    eta: float,
    n_sites: int | None = None,
    w_max: int = W_MAX,
    max_clusters: int = MAX_CLUSTERS,
    unsafe_beta: bool = False,
    ursell_max_vertices: int = URSELL_MAX_VERTICES,
) -> LogZEstimate:
    """Estimate log tr e^{-beta H} to within eta, with bookkeeping.

    Args:
        h: Hamiltonian
        beta: Inverse temperature, below 1/(100 Δ)
        eta: Additive accuracy in (0, 1)
        n_sites: Number of sites the trace runs over (defaults to h.n);
            used when h is a restriction acting on a subsystem
        w_max: Cap on the truncation order and polymer size
        max_clusters: Budget on enumerated clusters
        ursell_max_vertices: Largest cluster graph handed to the Ursell function
        unsafe_beta: Skip the threshold gate

    Returns:
        LogZEstimate with the value and the order actually used
    """
    start = time.perf_counter()
    n = h.n if n_sites is None else n_sites
    if not 0 < eta < 1:
        raise InvalidInputError(f"eta must lie in (0, 1), got {eta}")
    if beta < 0:
        raise InvalidInputError(f"beta must be >= 0, got {beta}")
    threshold = critical_beta(h, BetaMode.CLUSTER)
    if beta >= threshold and not unsafe_beta:
        raise ThresholdError(beta, threshold, BetaMode.CLUSTER.value)

    base = n * math.log(2)
    if beta == 0 or h.m == 0 or n == 0:
        return LogZEstimate(base, beta, eta, 0, 0, 0, 0.0, time.perf_counter() - start)

    delta = h.degree
    k_requested = truncation_order(n, beta, eta, delta)
    k = min(k_requested, w_max)
    if k < k_requested:
        logger.warning("truncation order %d capped at w_max=%d; accuracy eta=%g not guaranteed", k_requested, w_max, eta)

    total = 0.0
    count = 0
    weights: dict[Polymer, float] = {}
    if k >= 1:
        for union in enumerate_polymers(h, k):
            for cluster in clusters_with_union(h, union):
                count += 1
                if count > max_clusters:
                    raise ResourceError(
                        f"cluster budget {max_clusters} exceeded at order {len(union)}", achieved=len(union) - 1
                    )
                product = 1.0
                for p in cluster.polymers:
                    if p not in weights:
                        weights[p] = polymer_weight(h, p, beta, w_max)
                    product *= weights[p]
                    if product == 0.0:
                        break
                if product != 0.0:
                    total += cluster.orderings * float(ursell(cluster.graph, ursell_max_vertices)) * product

    elapsed = time.perf_counter() - start
    logger.debug("log Z estimate: k=%d clusters=%d elapsed=%.3fs", k, count, elapsed)
    return LogZEstimate(
        base + total, beta, eta, k, k_requested, count, truncation_error(n, beta, k, delta), elapsed
    )


def log_partition_estimate(h: Hamiltonian, beta: float, eta: float, **kwargs) -> float:
    """z_hat with |z_hat - log tr e^{-beta H}| <= eta."""
    return log_partition_report(h, beta, eta, **kwargs).z_hat


def kp_condition_sum(h: Hamiltonian, beta: float, w_max: int = 6) -> float:
    """max_a of sum over polymers gamma incompatible with {a} of |w_gamma| (beta_*/beta)^|gamma| e^|gamma|.

    Polymers up to w_max are summed directly. Larger ones use |w_gamma| <= beta^|gamma|
    and the count bound, over the (Δ+1) terms a polymer can start from.
    """
    if beta <= 0:
        raise InvalidInputError(f"beta must be > 0, got {beta}")
    b_star = polymer_beta(h)
    scale = math.e * b_star / beta
    polymers = enumerate_polymers(h, w_max)
    weights = {p: abs(polymer_weight(h, p, beta, w_max)) for p in polymers}

    delta = h.degree
    tail = 0.0
    for w in range(w_max + 1, w_max + 400):
        piece = (delta + 1) * polymer_count_bound(delta, w) * (math.e * b_star) ** w
        tail += piece
        if piece < 1e-18:
            break

    worst = 0.0
    for a in range(h.m):
        near = set(h.closed_neighborhood([a]))
        direct = sum(wt * scale ** len(p) for p, wt in weights.items() if wt and near & set(p))
        worst = max(worst, direct + tail)
    logger.debug("KP sum at beta=%.4g: %.4g (tail %.3g)", beta, worst, tail)
    return worst
