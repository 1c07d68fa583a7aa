"""Model families: build benchmark Hamiltonians by name."""

from abc import ABC, abstractmethod

import numpy as np

from src.core.hamiltonian import Hamiltonian, Term
from src.core.pauli import AXES, PauliString, SignedPauli
from src.utils.errors import InvalidInputError


def _term(n: int, coeff: float, sites: dict[int, str]) -> Term:
    return Term(float(coeff), SignedPauli(PauliString.from_sites(n, sites)))


def _check_coeff(name: str, value: float) -> float:
    if not -1.0 <= value <= 1.0:
        raise InvalidInputError(f"{name}={value} must lie in [-1, 1]")
    return float(value)


class ModelFamily(ABC):
    name: str

    @abstractmethod
    def build(self) -> Hamiltonian:
        """Return the Hamiltonian of this family instance."""
        ...


class ChainTFIM(ModelFamily):
    """Open transverse-field Ising chain, H = -J sum Z_i Z_{i+1} - g sum X_i."""

    name = "chain-tfim"

    def __init__(self, n: int, J: float = 1.0, g: float = 1.0):
        if n < 2:
            raise InvalidInputError(f"chain-tfim needs n >= 2, got {n}")
        self.n = n
        self.J = _check_coeff("J", J)
        self.g = _check_coeff("g", g)

    def build(self) -> Hamiltonian:
        n = self.n
        terms = [_term(n, -self.J, {i: "Z", i + 1: "Z"}) for i in range(n - 1)]
        terms += [_term(n, -self.g, {i: "X"}) for i in range(n)]
        return Hamiltonian.build(terms, n, 2)


class GridZZ(ModelFamily):
    """Nearest-neighbour ZZ couplings on an open rows x cols grid."""

    name = "grid-zz"

    def __init__(self, rows: int, cols: int, J: float = 1.0):
        if rows < 1 or cols < 1 or rows * cols < 2:
            raise InvalidInputError(f"grid-zz needs at least two sites, got {rows}x{cols}")
        self.rows, self.cols = rows, cols
        self.J = _check_coeff("J", J)

    def build(self) -> Hamiltonian:
        n = self.rows * self.cols
        terms = []
        for r in range(self.rows):
            for c in range(self.cols):
                site = r * self.cols + c
                if c + 1 < self.cols:
                    terms.append(_term(n, -self.J, {site: "Z", site + 1: "Z"}))
                if r + 1 < self.rows:
                    terms.append(_term(n, -self.J, {site: "Z", site + self.cols: "Z"}))
        return Hamiltonian.build(terms, n, 2)


class HeisenbergChain(ModelFamily):
    """Open Heisenberg chain; each bond contributes separate XX, YY and ZZ terms."""

    name = "heisenberg-chain"

    def __init__(self, n: int, J: float = 1.0):
        if n < 2:
            raise InvalidInputError(f"heisenberg-chain needs n >= 2, got {n}")
        self.n = n
        self.J = _check_coeff("J", J)

    def build(self) -> Hamiltonian:
        n = self.n
        terms = [
            _term(n, self.J, {i: axis, i + 1: axis})
            for i in range(n - 1)
            for axis in AXES
        ]
        return Hamiltonian.build(terms, n, 2)


class RandomKLocal(ModelFamily):
    """m random K-local Pauli terms with uniform coefficients in [low, high]."""

    name = "random-klocal"

    def __init__(self, n: int, m: int, K: int, low: float = -1.0, high: float = 1.0, seed: int = 0):
        if K < 1 or K > n:
            raise InvalidInputError(f"random-klocal needs 1 <= K <= n, got K={K}, n={n}")
        if m < 0:
            raise InvalidInputError(f"random-klocal needs m >= 0, got {m}")
        low, high = _check_coeff("low", low), _check_coeff("high", high)
        if low > high:
            raise InvalidInputError(f"empty coefficient range [{low}, {high}]")
        self.n, self.m, self.K = n, m, K
        self.low, self.high = low, high
        self.seed = seed

    def build(self) -> Hamiltonian:
        rng = np.random.default_rng(self.seed)
        terms = []
        for _ in range(self.m):
            sites = sorted(int(s) for s in rng.choice(self.n, size=self.K, replace=False))
            axes = rng.integers(3, size=self.K)
            coeff = float(rng.uniform(self.low, self.high))
            terms.append(_term(self.n, coeff, {s: AXES[a] for s, a in zip(sites, axes)}))
        return Hamiltonian.build(terms, self.n, self.K)


FAMILIES = {
    ChainTFIM.name: ChainTFIM,
    GridZZ.name: GridZZ,
    HeisenbergChain.name: HeisenbergChain,
    RandomKLocal.name: RandomKLocal,
}


def create_family(name: str, **params) -> ModelFamily:
    """Factory: build a model family from its name and size parameters."""
    family = FAMILIES.get(name)
    if family is None:
        raise InvalidInputError(f"Unknown model family: {name}. Available: {', '.join(FAMILIES)}")
    try:
        return family(**params)
    except TypeError as e:
        raise InvalidInputError(f"bad parameters for {name}: {e}") from e
