"""Dense-matrix ground truth for small systems.

Everything here materializes 2^n x 2^n matrices, so n is capped (12 by
default). Site 0 is the leftmost tensor factor.
"""

import logging
from dataclasses import asdict, dataclass
from functools import reduce

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from src.core.hamiltonian import Hamiltonian
from src.core.pauli import PauliString
from src.utils.errors import DimensionError, InvalidInputError, ResourceError

logger = logging.getLogger(__name__)

MAX_SITES = 12
PSD_SLACK = 1e-10
HERMITIAN_TOL = 1e-12

_I2 = np.eye(2, dtype=complex)
_SINGLE = {
    "I": _I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PHASES = (1, 1j, -1, -1j)


def check_dense_size(n: int, cap: int = MAX_SITES) -> None:
    if n > cap:
        raise ResourceError(f"dense oracle limited to n <= {cap}, got n={n}")


def pauli_dense(p: PauliString) -> np.ndarray:
    check_dense_size(p.n)
    factors = [_SINGLE[p.axis(s)] for s in range(p.n)]
    mat = reduce(np.kron, factors, np.ones((1, 1), dtype=complex))
    return _PHASES[p.phase_exp] * mat


def hamiltonian_dense(h: Hamiltonian, terms=None) -> np.ndarray:
    """Dense sum of lambda_a E_a over ``terms`` (all terms by default)."""
    check_dense_size(h.n)
    dim = 1 << h.n
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(h.m) if terms is None else terms:
        out += h.terms[a].coeff * pauli_dense(h.terms[a].string)
    return out


def assert_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    err = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if err > tol:
        raise InvalidInputError(f"matrix is not Hermitian (max |A - A^dagger| = {err:.3g})")


def expm_hermitian(a: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(scale * A) for Hermitian A via eigendecomposition."""
    assert_hermitian(a)
    w, v = scipy.linalg.eigh(a)
    return (v * np.exp(scale * w)) @ v.conj().T


def gibbs_density(h: Hamiltonian, beta: float) -> np.ndarray:
    """e^{-beta H} / tr e^{-beta H}."""
    hd = hamiltonian_dense(h)
    w, v = scipy.linalg.eigh(hd)
    weights = np.exp(-beta * (w - w.min()))
    weights /= weights.sum()
    return (v * weights) @ v.conj().T


def log_partition_exact(h: Hamiltonian, beta: float) -> float:
    """log tr e^{-beta H}."""
    w = scipy.linalg.eigvalsh(hamiltonian_dense(h))
    return float(logsumexp(-beta * w))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the sum of singular values of a - b."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return 0.5 * float(np.sum(np.linalg.svd(a - b, compute_uv=False)))


def trace_distance_hermitian(a: np.ndarray, b: np.ndarray) -> float:
    """Half the absolute eigenvalue sum; valid when a - b is Hermitian."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a - b
    return 0.5 * float(np.sum(np.abs(scipy.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def min_eigenvalue(a: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


def is_psd(a: np.ndarray, slack: float = PSD_SLACK) -> bool:
    return min_eigenvalue(a) >= -slack


def product_state_density(state) -> np.ndarray:
    """Density matrix of a stabilizer product state, sites as (axis, sign)."""
    check_dense_size(len(state.sites))
    factors = [0.5 * (_I2 + sign * _SINGLE[axis]) for axis, sign in state.sites]
    return reduce(np.kron, factors, np.ones((1, 1), dtype=complex))


@dataclass
class BoundCheck:
    """Outcome of a PSD-sandwich check; margins are minimum eigenvalues."""

    check: str
    passed: bool
    lower_margin: float
    upper_margin: float
    bound: float
    precondition_ok: bool
    note: str = ""

    def to_record(self) -> dict:
        return asdict(self)


def _sandwich_precondition(h: Hamiltonian, beta: float, C: float) -> tuple[bool, str]:
    problems = []
    if C <= 5:
        problems.append(f"C={C} must exceed 5")
    limit = 1.0 / (2 * C * (h.degree + 1))
    if not beta < limit:
        problems.append(f"beta={beta:.4g} not below 1/(2C(Δ+1))={limit:.4g}")
    if h.n > 10:
        problems.append(f"n={h.n} above 10")
    return not problems, "; ".join(problems)


def check_spectral_sandwich(
    h: Hamiltonian, a_star: int, beta: float, C: float, slack: float = PSD_SLACK
) -> BoundCheck:
    """(1 - 15/C) e^{-bH} <= e^{-b(H - H_(S))} <= (1 + 15/C) e^{-bH}, S = supp(a*)."""
    ok, note = _sandwich_precondition(h, beta, C)
    S = h.supports[a_star]
    full = hamiltonian_dense(h)
    outer = hamiltonian_dense(h, h.localized_terms(S))
    gibbs = expm_hermitian(full, -beta)
    peeled = expm_hermitian(full - outer, -beta)
    bound = 15.0 / C
    lower = min_eigenvalue(peeled - (1 - bound) * gibbs)
    upper = min_eigenvalue((1 + bound) * gibbs - peeled)
    passed = lower >= -slack and upper >= -slack
    if not passed:
        logger.info("spectral sandwich violated: a*=%d beta=%.4g margins %.3g/%.3g", a_star, beta, lower, upper)
    return BoundCheck("spectral_sandwich", passed, lower, upper, bound, ok, note)


def check_peeling(
    h: Hamiltonian,
    a_star: int,
    P: np.ndarray,
    t: int,
    beta: float,
    C: float,
    slack: float = PSD_SLACK,
) -> BoundCheck:
    """Sandwich of e^{-bH/2} P e^{-bH/2} by the truncated peeling with T_{t,b/2}(H, H_(S))."""
    from src.sampling.monomial_sampler import truncated_series_dense

    ok, note = _sandwich_precondition(h, beta, C)
    assert_hermitian(P, 1e-10)
    spectrum = scipy.linalg.eigvalsh(P)
    if spectrum[0] < 0.5 - slack or spectrum[-1] > 2 + slack:
        ok = False
        note = "; ".join(filter(None, [note, "P spectrum outside [0.5, 2]"]))

    S = h.supports[a_star]
    Q = h.localized_terms(S)
    full = hamiltonian_dense(h)
    outer = hamiltonian_dense(h, Q)
    half = expm_hermitian(full, -beta / 2)
    core = half @ P @ half
    T = truncated_series_dense(h, Q, beta / 2, t)
    side = T @ expm_hermitian(full - outer, -beta / 2)
    peeled = side.conj().T @ P @ side
    bound = 100.0 / C**t
    lower = min_eigenvalue(peeled - (1 - bound) * core)
    upper = min_eigenvalue((1 + bound) * core - peeled)
    passed = lower >= -slack and upper >= -slack
    return BoundCheck("peeling", passed, lower, upper, bound, ok, note)
