"""Low-intersection Hamiltonians with Pauli terms and their dual interaction graph."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import networkx as nx

from src.core.pauli import PauliString, SignedPauli, support, support_mask
from src.utils.errors import InvalidInputError

logger = logging.getLogger(__name__)

TermSet = tuple[int, ...]


class BetaMode(str, Enum):
    SEPARABILITY = "separability"
    SAMPLING = "sampling"
    CLUSTER = "cluster"


@dataclass(frozen=True)
class Term:
    """lambda_a * E_a with |lambda_a| <= 1 and E_a a positive Hermitian string."""

    coeff: float
    pauli: SignedPauli

    @property
    def string(self) -> PauliString:
        return self.pauli.string

    @property
    def support(self) -> frozenset[int]:
        return support(self.pauli.string)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    n: int
    locality: int
    terms: tuple[Term, ...]
    dual_adjacency: tuple[TermSet, ...]
    site_index: tuple[TermSet, ...]
    supports: tuple[frozenset[int], ...]
    masks: tuple[int, ...]

    @classmethod
    def build(
        cls,
        terms: Sequence[Term],
        n: int,
        locality: int,
        declared_degree: int | None = None,
    ) -> "Hamiltonian":
        """Validate the terms and precompute the dual graph and the site index.

        Args:
            terms: Pauli terms, indexed by list position
            n: Number of sites
            locality: Declared K; every support must fit
            declared_degree: Optional Δ from a file, checked against the computed one

        Returns:
            The immutable Hamiltonian
        """
        if n < 0 or locality < 1:
            raise InvalidInputError(f"need n >= 0 and K >= 1, got n={n}, K={locality}")

        site_lists: list[list[int]] = [[] for _ in range(n)]
        supports = []
        for a, term in enumerate(terms):
            p = term.pauli.string
            if p.n != n:
                raise InvalidInputError(f"term {a} acts on {p.n} sites, Hamiltonian has {n}")
            if not -1.0 <= term.coeff <= 1.0:
                raise InvalidInputError(f"term {a}: coefficient {term.coeff} outside [-1, 1]")
            if p.phase_exp != 0:
                raise InvalidInputError(f"term {a}: {p.label()} must be positively signed")
            supp = support(p)
            if not supp:
                raise InvalidInputError(f"term {a}: identity terms only shift the energy; drop them")
            if len(supp) > locality:
                raise InvalidInputError(
                    f"term {a}: support size {len(supp)} exceeds locality {locality}"
                )
            supports.append(supp)
            for s in supp:
                site_lists[s].append(a)

        adjacency = []
        for a, supp in enumerate(supports):
            nbrs = set()
            for s in supp:
                nbrs.update(site_lists[s])
            nbrs.discard(a)
            adjacency.append(tuple(sorted(nbrs)))

        h = cls(
            n=n,
            locality=locality,
            terms=tuple(terms),
            dual_adjacency=tuple(adjacency),
            site_index=tuple(tuple(lst) for lst in site_lists),
            supports=tuple(supports),
            masks=tuple(support_mask(t.pauli.string) for t in terms),
        )
        for a, nbrs in enumerate(h.dual_adjacency):
            for b in nbrs:
                assert a in h.dual_adjacency[b], f"dual graph asymmetric at ({a}, {b})"
        if declared_degree is not None and declared_degree != h.degree:
            raise InvalidInputError(
                f"declared degree {declared_degree} does not match computed degree {h.degree}"
            )
        logger.debug("built Hamiltonian n=%d m=%d K=%d Δ=%d", n, len(terms), locality, h.degree)
        return h

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def degree(self) -> int:
        return max((len(nbrs) for nbrs in self.dual_adjacency), default=0)

    def neighbors(self, a: int) -> TermSet:
        return self.dual_adjacency[a]

    def closed_neighborhood(self, term_list: Iterable[int], within: Iterable[int] | None = None) -> TermSet:
        """Sorted set of the given terms and their dual-graph neighbors."""
        out: set[int] = set()
        for b in term_list:
            out.add(b)
            out.update(self.dual_adjacency[b])
        if within is not None:
            out.intersection_update(within)
        return tuple(sorted(out))

    def restricted_terms(self, sites: Iterable[int]) -> TermSet:
        """E^(S): terms whose support lies inside S."""
        mask = _mask_of(sites)
        return tuple(a for a, m in enumerate(self.masks) if m & ~mask == 0)

    def localized_terms(self, sites: Iterable[int]) -> TermSet:
        """E_(S): terms whose support meets S."""
        found: set[int] = set()
        for s in sites:
            found.update(self.site_index[s])
        return tuple(sorted(found))

    def terms_support(self, term_list: Iterable[int]) -> frozenset[int]:
        out: set[int] = set()
        for a in term_list:
            out.update(self.supports[a])
        return frozenset(out)

    def restrict(self, term_list: Iterable[int]) -> "Hamiltonian":
        """Sub-Hamiltonian on the same sites keeping only ``term_list``."""
        return Hamiltonian.build([self.terms[a] for a in sorted(set(term_list))], self.n, self.locality)

    def dual_graph(self, term_list: Iterable[int] | None = None) -> nx.Graph:
        nodes = range(self.m) if term_list is None else sorted(set(term_list))
        g = nx.Graph()
        g.add_nodes_from(nodes)
        for a in g.nodes:
            for b in self.dual_adjacency[a]:
                if b in g:
                    g.add_edge(a, b)
        return g

    def components_touch(self, term_list: Iterable[int], Q: Iterable[int]) -> bool:
        """True when every connected component of the terms contains an element of Q."""
        q = set(Q)
        g = self.dual_graph(term_list)
        return all(comp & q for comp in nx.connected_components(g))


def _mask_of(sites: Iterable[int]) -> int:
    mask = 0
    for s in sites:
        mask |= 1 << s
    return mask


def _effective_degree(h: Hamiltonian) -> int:
    return max(h.degree, 1)


def critical_beta(h: Hamiltonian, mode: BetaMode | str) -> float:
    """Inverse-temperature gate of each mode (Δ=0 counts as 1)."""
    delta = _effective_degree(h)
    K = h.locality
    match BetaMode(mode):
        case BetaMode.SEPARABILITY:
            return 1.0 / (100 * delta * K)
        case BetaMode.SAMPLING:
            return 1.0 / (200 * delta * K)
        case BetaMode.CLUSTER:
            return 1.0 / (100 * delta)


def potential_beta(h: Hamiltonian) -> float:
    """Scale of the coefficient potential, 1/(50(Δ+1)K)."""
    return 1.0 / (50 * (h.degree + 1) * h.locality)


def polymer_beta(h: Hamiltonian) -> float:
    """Convergence radius of the polymer series, 1/(e(e+1)(1+e(Δ-1)))."""
    return beta_star(_effective_degree(h))


def beta_star(delta: int) -> float:
    e = math.e
    return 1.0 / (e * (e + 1) * (1 + e * (max(delta, 1) - 1)))


def make_term(coeff: float, label: str, n: int) -> Term:
    """Term from a text label such as ``"Z0 Z1"``."""
    return Term(float(coeff), SignedPauli.of(PauliString.from_label(label, n)))
