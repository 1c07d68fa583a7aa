"""Exact algebra of phased Pauli strings.

A ``PauliString`` on n sites stores two integer bitmasks and a phase:

    P = i^phase_exp * sigma_0 (x) sigma_1 (x) ... (x) sigma_{n-1}

where sigma_j is I, X, Z or Y according to (x_j, z_j) = (0,0), (1,0), (0,1),
(1,1). Y is stored as the Y matrix itself, so a string is Hermitian exactly
when phase_exp is even. Internally products go through the XZ form
Y = i X Z, which is where the count of Y sites enters the phase rule.

Python ints are unbounded, so any n is supported.
"""

import re
from dataclasses import dataclass
from typing import NamedTuple

from src.utils.errors import DimensionError, InvalidInputError

AXES = ("X", "Y", "Z")

_PHASE_LABELS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LABEL_PHASES = {v: k for k, v in _PHASE_LABELS.items()}
_LABEL_RE = re.compile(r"^(\+i|-i|\+|-)?\s*(.*)$")
_TOKEN_RE = re.compile(r"^([IXYZ])(\d+)$")


def _popcount(v: int) -> int:
    return v.bit_count()


def _axis_bits(axis: str) -> tuple[int, int]:
    match axis:
        case "X":
            return 1, 0
        case "Y":
            return 1, 1
        case "Z":
            return 0, 1
        case "I":
            return 0, 0
    raise InvalidInputError(f"Unknown Pauli axis: {axis!r}. Available: I, X, Y, Z")


@dataclass(frozen=True, slots=True)
class PauliString:
    n: int
    x_bits: int = 0
    z_bits: int = 0
    phase_exp: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise DimensionError(f"negative site count {self.n}")
        limit = 1 << self.n
        if not (0 <= self.x_bits < limit and 0 <= self.z_bits < limit):
            raise DimensionError(f"bit-vector wider than n={self.n}")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, site: int, axis: str) -> "PauliString":
        if not 0 <= site < n:
            raise InvalidInputError(f"site {site} out of range for n={n}")
        x, z = _axis_bits(axis)
        return cls(n, x << site, z << site)

    @classmethod
    def from_sites(cls, n: int, paulis: dict[int, str], phase_exp: int = 0) -> "PauliString":
        x_bits = z_bits = 0
        for site, axis in paulis.items():
            if not 0 <= site < n:
                raise InvalidInputError(f"site {site} out of range for n={n}")
            x, z = _axis_bits(axis)
            x_bits |= x << site
            z_bits |= z << site
        return cls(n, x_bits, z_bits, phase_exp)

    @classmethod
    def from_label(cls, label: str, n: int) -> "PauliString":
        """Parse the text form, e.g. ``"+X0 Z3 Y4"``, ``"-iX1"`` or ``"+I"``."""
        m = _LABEL_RE.match(label.strip())
        sign, body = m.group(1) or "+", m.group(2).strip()
        paulis: dict[int, str] = {}
        for token in body.split():
            t = _TOKEN_RE.match(token)
            if t is None:
                if token == "I":
                    continue
                raise InvalidInputError(f"bad Pauli token {token!r} in {label!r}")
            axis, site = t.group(1), int(t.group(2))
            if site in paulis:
                raise InvalidInputError(f"site {site} repeated in {label!r}")
            if axis != "I":
                paulis[site] = axis
        return cls.from_sites(n, paulis, _LABEL_PHASES[sign])

    @property
    def y_count(self) -> int:
        return _popcount(self.x_bits & self.z_bits)

    @property
    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exp % 2 == 0

    def axis(self, site: int) -> str:
        x = (self.x_bits >> site) & 1
        z = (self.z_bits >> site) & 1
        return "IXZY"[x | (z << 1)]

    def label(self) -> str:
        """Text form: phase, then axis+site pairs in ascending site order."""
        tokens = [f"{self.axis(s)}{s}" for s in sorted(support(self))]
        return _PHASE_LABELS[self.phase_exp] + (" ".join(tokens) if tokens else "I")

    def __str__(self) -> str:
        return self.label()

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)


class SignedPauli(NamedTuple):
    """A Hermitian Pauli string, sign +1 or -1."""

    string: PauliString

    @classmethod
    def of(cls, p: PauliString) -> "SignedPauli":
        if not p.is_hermitian:
            raise InvalidInputError(f"{p.label()} is not Hermitian")
        return cls(p)

    @property
    def sign(self) -> int:
        return 1 if self.string.phase_exp == 0 else -1

    def label(self) -> str:
        return self.string.label()


class ZeroOperator:
    """The zero operator; a first-class outcome of symmetrization."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ZERO"

    def __reduce__(self):
        return (ZeroOperator, ())


ZERO = ZeroOperator()


class ScaledPauli(NamedTuple):
    """coeff * pauli with a real coeff and a positively signed Hermitian string."""

    coeff: float
    pauli: SignedPauli


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    """Exact product p*q.

    With Y = iXZ, sigma(x, z) = i^{x&z} X^x Z^z, and moving Z^{z1} past
    X^{x2} costs (-1)^{|z1 & x2|}. Bits XOR.
    """
    if p.n != q.n:
        raise DimensionError(f"cannot multiply strings on {p.n} and {q.n} sites")
    x = p.x_bits ^ q.x_bits
    z = p.z_bits ^ q.z_bits
    phase = (
        p.phase_exp
        + q.phase_exp
        + _popcount(p.x_bits & p.z_bits)
        + _popcount(q.x_bits & q.z_bits)
        + 2 * _popcount(p.z_bits & q.x_bits)
        - _popcount(x & z)
    )
    return PauliString(p.n, x, z, phase)


def multiply_all(n: int, strings) -> PauliString:
    acc = PauliString.identity(n)
    for s in strings:
        acc = pauli_mul(acc, s)
    return acc


def dagger(p: PauliString) -> PauliString:
    return PauliString(p.n, p.x_bits, p.z_bits, -p.phase_exp)


def commutes(p: PauliString, q: PauliString) -> bool:
    """Symplectic form: strings commute iff |x1&z2| + |z1&x2| is even."""
    if p.n != q.n:
        raise DimensionError(f"cannot compare strings on {p.n} and {q.n} sites")
    return (_popcount(p.x_bits & q.z_bits) + _popcount(p.z_bits & q.x_bits)) % 2 == 0


def support(p: PauliString) -> frozenset[int]:
    bits = p.x_bits | p.z_bits
    sites = []
    while bits:
        low = bits & -bits
        sites.append(low.bit_length() - 1)
        bits ^= low
    return frozenset(sites)


def support_mask(p: PauliString) -> int:
    return p.x_bits | p.z_bits


_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


def normalized_trace(p: PauliString) -> complex:
    """tr(P)/2^n: i^phase_exp for the identity, 0 otherwise."""
    if not p.is_identity:
        return 0j
    return _I_POWERS[p.phase_exp]


def hermitian_part(alpha: float, p: PauliString) -> ZeroOperator | ScaledPauli:
    """(alpha*P + (alpha*P)^dagger)/2 as ZERO or (coeff, bare Hermitian string).

    The sign of the phase is folded into ``coeff``; the returned string
    always has phase_exp 0.
    """
    match p.phase_exp:
        case 1 | 3:
            return ZERO
        case 0:
            coeff = float(alpha)
        case _:
            coeff = -float(alpha)
    if coeff == 0.0:
        return ZERO
    bare = PauliString(p.n, p.x_bits, p.z_bits, 0)
    return ScaledPauli(coeff, SignedPauli(bare))
