"""Property checks behind ``gibbs_cli.py verify``.

Each suite builds its instances from a seed, runs the checks and returns a
``SuiteReport``. The default sizes finish in seconds; ``full=True`` uses
acceptance-size instances and sample counts.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from src.core.hamiltonian import BetaMode, Hamiltonian, critical_beta, make_term, potential_beta
from src.core.pauli import PauliString, ScaledPauli, SignedPauli, commutes, dagger, support
from src.counting.cluster_expansion import enumerate_polymers, kp_condition_sum, log_partition_report, polymer_count_bound
from src.models.families import ChainTFIM, GridZZ, RandomKLocal
from src.oracle.exact_oracle import (
    check_peeling,
    check_spectral_sandwich,
    expm_hermitian,
    gibbs_density,
    hamiltonian_dense,
    log_partition_exact,
    pauli_dense,
    product_state_density,
    trace_distance,
)
from src.sampling.monomial_sampler import (
    f_k_bound,
    f_k_dense,
    monomial_dense,
    propagator_bound,
    sample_f_k,
    sample_propagator,
    truncated_series_dense,
)
from src.sampling.pinning import (
    Block,
    Configuration,
    HermitianMonomial,
    evaluate_config_dense,
    run_pinning,
    run_separability,
)
from src.sampling.stabilizer_output import ProductState, sample_state
from src.sampling.tree_walk import (
    Schedule,
    WalkParams,
    enumerate_sample_tree,
    leaf_average_density,
    sample_gibbs_state,
    stationary_distribution,
    transition_matrix,
    tree_ratios,
)
from src.utils.errors import InvariantError
from src.utils.randomness import RngChooser, enumerate_branches, sample_rng

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REGRESSION_SEEDS = tuple(range(20))
DENSE_TOL = 1e-12
ENUM_TOL = 1e-10
END2END_FULL_SAMPLES = 100_000
END2END_BUDGET_SECONDS = 1800.0


@dataclass
class SuiteReport:
    suite: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)
    margins: dict[str, float] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.cases += 1
        if not ok:
            self.failures.append(f"{name}: {detail}" if detail else name)
        return ok

    def worst(self, name: str, value: float, larger_is_worse: bool = True) -> None:
        """Keep the worst value seen for a margin."""
        old = self.margins.get(name)
        if old is None or (value > old if larger_is_worse else value < old):
            self.margins[name] = float(value)

    def to_record(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "suite": self.suite,
            "cases": self.cases,
            "failures": list(self.failures),
            "margins": dict(self.margins),
            "passed": self.passed,
        }


def _random_string(rng: np.random.Generator, n: int, phase: bool = True) -> PauliString:
    limit = 1 << n
    return PauliString(n, int(rng.integers(limit)), int(rng.integers(limit)), int(rng.integers(4)) if phase else 0)


def _random_instance(rng: np.random.Generator, n_range, m_range, k_max: int = 2) -> Hamiltonian:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    K = int(rng.integers(1, min(k_max, n) + 1))
    return RandomKLocal(n, m, K, seed=int(rng.integers(2**31))).build()


def _random_subset(rng: np.random.Generator, m: int) -> tuple[int, ...]:
    while True:
        picked = tuple(a for a in range(m) if rng.random() < 0.5)
        if picked:
            return picked


# --------------------------------------------------------------------------- #
# Suites


def algebra_suite(full: bool = False, seed: int = 0) -> SuiteReport:
    """Pauli products, daggers and commutation against dense matrices."""
    report = SuiteReport("algebra")
    for a, b in product("IXYZ", repeat=2):
        p, q = PauliString.from_label(f"{a}0", 1), PauliString.from_label(f"{b}0", 1)
        err = np.max(np.abs(pauli_dense(p * q) - pauli_dense(p) @ pauli_dense(q)))
        report.worst("single_qubit_error", err)
        report.check(f"{a}*{b}", err <= DENSE_TOL, f"dense mismatch {err:.3g}")

    rng = np.random.default_rng(seed)
    for i in range(1000 if full else 200):
        n = int(rng.integers(1, 4))
        p, q = _random_string(rng, n), _random_string(rng, n)
        dp, dq = pauli_dense(p), pauli_dense(q)
        err = np.max(np.abs(pauli_dense(p * q) - dp @ dq))
        report.worst("random_product_error", err)
        report.check(f"random product {i}", err <= DENSE_TOL, f"{p.label()} * {q.label()} off by {err:.3g}")
        dag_err = np.max(np.abs(pauli_dense(dagger(p)) - dp.conj().T))
        report.check(f"dagger {i}", dag_err <= DENSE_TOL, p.label())
        dense_commute = np.allclose(dp @ dq, dq @ dp, atol=DENSE_TOL)
        report.check(f"commutes {i}", commutes(p, q) == dense_commute, f"{p.label()}, {q.label()}")
    return report


def unbiased_suite(full: bool = False, seed: int = 0) -> SuiteReport:
    """Exhaustive enumeration of the samplers against dense series, plus sample means."""
    report = SuiteReport("unbiased")
    rng = np.random.default_rng(seed)

    for i in range(10 if full else 4):
        h = _random_instance(rng, (2, 3), (1, 2))
        Q = _random_subset(rng, h.m)
        for k in range(4):
            branches = enumerate_branches(lambda ch, k=k: sample_f_k(h, Q, k, ch))
            est = sum(b.probability * b.result.coeff * monomial_dense(h, b.result.term_list) for b in branches)
            err = float(np.max(np.abs(est - f_k_dense(h, Q, k))))
            report.worst("f_k_error", err)
            report.check(f"f_{k} instance {i}", err <= ENUM_TOL, f"max error {err:.3g}")

        beta = 0.1
        branches = enumerate_branches(lambda ch: sample_propagator(h, Q, beta, 3, ch))
        dim = 1 << h.n
        est = sum(
            b.probability * (np.eye(dim) + b.result.coeff * monomial_dense(h, b.result.term_list)) for b in branches
        )
        err = float(np.max(np.abs(est - truncated_series_dense(h, Q, beta, 3))))
        report.worst("propagator_error", err)
        report.check(f"propagator instance {i}", err <= ENUM_TOL, f"max error {err:.3g}")

    n = 4
    for i in range(200 if full else 40):
        P = _random_string(rng, n, phase=False)
        if P.is_identity:
            continue
        cr = float(rng.uniform(-1, 1))
        mono = HermitianMonomial(ScaledPauli(1.0, SignedPauli(P)), 1, (), support(P))
        config = Configuration((Block(cr, mono),))
        branches = enumerate_branches(lambda ch: sample_state(config, n, ch))
        est = sum(b.probability * product_state_density(b.result) for b in branches)
        target = (np.eye(1 << n) + cr * pauli_dense(P)) / 2**n
        err = float(np.max(np.abs(est - target)))
        report.worst("emission_error", err)
        report.check(f"emission {i}", err <= DENSE_TOL, f"{P.label()} c={cr:.3f}: {err:.3g}")

    _separability_mean(report, full, seed)
    return report


def _separability_mean(report: SuiteReport, full: bool, seed: int) -> None:
    h = ChainTFIM(4 if full else 3).build()
    beta = critical_beta(h, BetaMode.SEPARABILITY) / 2
    runs = 200_000 if full else 3000
    chooser = RngChooser(np.random.default_rng(seed))
    dim = 1 << h.n
    total = np.zeros((dim, dim), dtype=complex)
    total_sq = np.zeros((dim, dim))
    for _ in range(runs):
        sigma = evaluate_config_dense(run_separability(h, beta, chooser), h.n)
        total += sigma
        total_sq += np.abs(sigma) ** 2
    mean = total / runs
    var = np.maximum(total_sq / runs - np.abs(mean) ** 2, 0.0)
    se = math.sqrt(float(var.sum()) / runs)
    dist = float(np.linalg.norm(mean - expm_hermitian(hamiltonian_dense(h), -beta)))
    report.margins["separability_frobenius"] = dist
    report.margins["separability_se"] = se
    report.check("separability mean", dist <= 5 * se + 1e-12, f"distance {dist:.3g} vs 5 SE {5 * se:.3g}")


def potential_suite(full: bool = False, seed: int = 0) -> SuiteReport:
    """Coefficient bounds of the samplers and the potential invariant of pinning."""
    report = SuiteReport("potential")
    rng = np.random.default_rng(seed)
    chooser = RngChooser(rng)

    draws = 100_000 if full else 5000
    fk_bad = prop_bad = 0
    instances = [_random_instance(rng, (2, 6), (1, 6), 3) for _ in range(20)]
    for _ in range(draws):
        h = instances[int(rng.integers(len(instances)))]
        a = int(rng.integers(h.m))
        Q = h.localized_terms(h.supports[a])
        k = int(rng.integers(5))
        s = sample_f_k(h, Q, k, chooser)
        if abs(s.coeff) > f_k_bound(h, len(Q), k) * (1 + 1e-9):
            fk_bad += 1
        beta = float(rng.uniform(0, critical_beta(h, BetaMode.SEPARABILITY)))
        p = sample_propagator(h, Q, beta, None, chooser)
        if abs(p.coeff) > propagator_bound(h, len(Q), beta, p.t) * (1 + 1e-9):
            prop_bad += 1
    report.margins["f_k_bound_violations"] = fk_bad
    report.margins["propagator_bound_violations"] = prop_bad
    report.check("f_k coefficient bound", fk_bad == 0, f"{fk_bad} of {draws} draws")
    report.check("propagator coefficient bound", prop_bad == 0, f"{prop_bad} of {draws} draws")

    h = ChainTFIM(4).build()
    beta = potential_beta(h) / 2
    beta_c = critical_beta(h, BetaMode.SEPARABILITY)
    runs = 10_000 if full else 300
    violations = final_bad = 0
    for _ in range(runs):
        try:
            config = run_pinning(h, beta, chooser, t_max=None, check_potential=True)
        except InvariantError as e:
            violations += 1
            logger.info("potential violation: %s", e)
            continue
        for block in config.blocks:
            if abs(block.coeff) > (beta / beta_c) ** block.monomial.degree * (1 + 1e-9):
                final_bad += 1
    report.margins["potential_violations"] = violations
    report.margins["final_coefficient_violations"] = final_bad
    report.check("potential invariant", violations == 0, f"{violations} of {runs} runs")
    report.check("final coefficient bound", final_bad == 0, f"{final_bad} blocks")
    return report


def _cluster_instances(rng: np.random.Generator, full: bool) -> list[Hamiltonian]:
    out = [ChainTFIM(4).build(), GridZZ(2, 3).build(), ChainTFIM(6 if full else 5).build()]
    if full:
        out += [ChainTFIM(8).build(), GridZZ(2, 4).build()]
    while len(out) < (10 if full else 4):
        h = _random_instance(rng, (3, 8 if full else 6), (2, 6))
        if h.m and h.degree <= 4:
            out.append(h)
    return out


def cluster_suite(full: bool = False, seed: int = 0) -> SuiteReport:
    """log Z estimate against the dense value, plus the polymer count and KP checks."""
    report = SuiteReport("cluster")
    rng = np.random.default_rng(seed)
    for i, h in enumerate(_cluster_instances(rng, full)):
        beta = 1.0 / (200 * max(h.degree, 1))
        exact = log_partition_exact(h, beta)
        for eta in (0.1, 0.01):
            est = log_partition_report(h, beta, eta)
            err = abs(est.z_hat - exact)
            report.worst(f"logz_error_eta_{eta}", err)
            report.check(f"log Z instance {i} eta={eta}", err <= eta, f"error {err:.3g} at k={est.k_used}")

        w_top = 6 if full else 4
        counts: dict[tuple[int, int], int] = {}
        for p in enumerate_polymers(h, w_top):
            for a in set(p):
                counts[(a, len(p))] = counts.get((a, len(p)), 0) + 1
        worst = max((c / polymer_count_bound(h.degree, w) for (_, w), c in counts.items()), default=0.0)
        report.worst("polymer_count_ratio", worst)
        report.check(f"polymer count bound instance {i}", worst <= 1.0, f"count/bound {worst:.3g}")

        if h.degree >= 2:
            s = kp_condition_sum(h, beta, w_max=4)
            report.worst("kp_sum", s)
            report.check(f"convergence condition instance {i}", s <= 1.0, f"sum {s:.3g}")
    return report


def sandwich_suite(full: bool = False, seed: int = 0, C: float = 10.0) -> SuiteReport:
    """Spectral sandwich and peeling inequalities on the regression corpus."""
    report = SuiteReport("sandwich")
    seeds = REGRESSION_SEEDS if full else REGRESSION_SEEDS[:5]
    for s in seeds:
        h = RandomKLocal(5 if full else 4, 4, 2, seed=s).build()
        rng = np.random.default_rng(s)
        beta = 0.9 / (2 * C * (h.degree + 1))
        res = check_spectral_sandwich(h, 0, beta, C)
        report.worst("sandwich_margin", min(res.lower_margin, res.upper_margin), larger_is_worse=False)
        report.check(f"sandwich seed {s}", res.passed and res.precondition_ok, res.note)

        P = np.eye(1 << h.n) + 0.4 * pauli_dense(_random_string(rng, h.n, phase=False))
        for t in (0, 1, 2):
            res = check_peeling(h, 0, P, t, beta, C)
            report.worst("peeling_margin", min(res.lower_margin, res.upper_margin), larger_is_worse=False)
            report.check(f"peeling seed {s} t={t}", res.passed and res.precondition_ok, res.note)

    h = ChainTFIM(3).build()
    base = 1.0 / (2 * C * (h.degree + 1))
    flagged = None
    for factor in (10, 100, 1000):
        if not check_spectral_sandwich(h, 0, factor * base, C).passed:
            flagged = factor
            break
    report.margins["violation_factor"] = float(flagged or 0)
    report.check("violation reported at large beta", flagged is not None, "no violation up to 1000x the bound")
    return report


def _density_index(states) -> dict:
    counts: dict[tuple, int] = {}
    for s in states:
        counts[s.sites] = counts.get(s.sites, 0) + 1
    return counts


def end2end_walk_params(h: Hamiltonian, epsilon: float, delta: float, full: bool) -> WalkParams:
    """Full runs use the calibrated schedule; quick runs fix small counts."""
    if full:
        return WalkParams.from_defaults(h.n, h.degree, epsilon, delta, schedule=Schedule.CALIBRATED)
    return WalkParams.from_defaults(h.n, h.degree, epsilon, delta, steps_per_epoch=200, max_epochs=50)


def end2end_suite(
    full: bool = False,
    seed: int = 0,
    epsilon: float = 0.1,
    delta: float = 0.01,
    bootstrap: int = 50,
) -> SuiteReport:
    """Trace distance between the mean output density and the Gibbs state."""
    report = SuiteReport("end2end")
    n = 4 if full else 3
    h = ChainTFIM(n).build()
    beta = critical_beta(h, BetaMode.SAMPLING) / 4
    samples = END2END_FULL_SAMPLES if full else 400
    params = end2end_walk_params(h, epsilon, delta, full)

    states = []
    failures = 0
    started = time.perf_counter()
    for i in range(samples):
        state = sample_gibbs_state(h, beta, epsilon, delta, sample_rng(seed, i), params)
        if state is None:
            failures += 1
        else:
            states.append(state)
    elapsed = time.perf_counter() - started
    report.margins["seconds"] = elapsed
    if full:
        report.check("runtime", elapsed <= END2END_BUDGET_SECONDS, f"{elapsed:.0f}s of {END2END_BUDGET_SECONDS:.0f}s")
    rate = failures / samples
    report.margins["walk_failure_rate"] = rate
    report.check("walk failure rate", rate <= 2 * delta, f"{failures} of {samples}")
    if not states:
        report.check("outputs", False, "every walk failed")
        return report

    counts = _density_index(states)
    keys = list(counts)
    densities = np.array([product_state_density(ProductState(k)) for k in keys])
    weights = np.array([counts[k] for k in keys], dtype=float)
    rho = gibbs_density(h, beta)

    def distance(w: np.ndarray) -> float:
        mean = np.tensordot(w / w.sum(), densities, axes=1)
        return trace_distance(mean, rho)

    dist = distance(weights)
    rng = np.random.default_rng(seed)
    boot = [distance(rng.multinomial(len(states), weights / weights.sum()).astype(float)) for _ in range(bootstrap)]
    se = float(np.std(boot, ddof=1))
    report.margins["trace_distance"] = dist
    report.margins["bootstrap_se"] = se
    report.check("trace distance", dist <= epsilon + 3 * se, f"{dist:.4g} vs {epsilon} + 3*{se:.3g}")
    return report


def tree_suite(full: bool = False, seed: int = 0) -> SuiteReport:
    """Explicit transition matrix on small sample trees."""
    report = SuiteReport("tree")
    n = 3
    instances = [
        ("single term", Hamiltonian.build([make_term(1.0, "Z0 Z1", n)], n, 2), 2 if full else 1),
        ("two levels", Hamiltonian.build([make_term(1.0, "Z0 Z1", n), make_term(0.5, "X2", n)], n, 2), 1),
    ]
    for name, h, t_max in instances:
        beta = critical_beta(h, BetaMode.SAMPLING) / 2
        tree = enumerate_sample_tree(h, beta, t_max)
        r = tree_ratios(tree, h, beta)
        omega = np.array([v.omega for v in tree])
        P = transition_matrix(tree, h, beta)
        pi_expected = r * omega / np.sum(r * omega)

        flow = pi_expected[:, None] * P
        rev = float(np.max(np.abs(flow - flow.T)))
        report.worst("reversibility_error", rev)
        report.check(f"{name}: reversibility", rev <= 1e-10, f"{rev:.3g}")

        pi = stationary_distribution(P)
        err = float(np.max(np.abs(pi - pi_expected)))
        report.worst("stationary_error", err)
        report.check(f"{name}: stationary distribution", err <= 1e-8, f"{err:.3g}")

        leaves = [i for i, v in enumerate(tree) if v.is_leaf]
        kappa = np.array([tree.nodes[i].omega * tree.nodes[i].r_hat for i in leaves])
        leaf_pi = pi[leaves] / pi[leaves].sum()
        err = float(np.max(np.abs(leaf_pi - kappa / kappa.sum())))
        report.check(f"{name}: leaf marginals", err <= 1e-8, f"{err:.3g}")

        depth = max(v.depth for v in tree)
        report.check(f"{name}: depth", depth <= h.n, f"depth {depth}")

        below = _leaf_mass_below(tree)
        for i, v in enumerate(tree):
            if v.is_leaf:
                continue
            ratio = r[i] / (below[id(v)] / v.omega)
            report.worst("ratio_estimate_spread", max(ratio, 1 / ratio))
            report.check(f"{name}: ratio at depth {v.depth}", 0.1 <= ratio <= 10, f"{ratio:.3g}")

        dist = trace_distance(leaf_average_density(tree, h.n), gibbs_density(h, beta))
        report.worst("leaf_average_distance", dist)
        report.check(f"{name}: leaf average", dist <= 1e-3, f"{dist:.3g}")
    return report


def _leaf_mass_below(tree) -> dict[int, float]:
    """sum of omega * tr sigma over the leaves under each node."""
    mass: dict[int, float] = {}
    for v in reversed(tree.nodes):
        own = v.omega * v.r_hat if v.is_leaf else 0.0
        mass[id(v)] = own + sum(mass[id(c)] for c in v.children.values())
    return mass


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "algebra": algebra_suite,
    "unbiased": unbiased_suite,
    "potential": potential_suite,
    "cluster": cluster_suite,
    "sandwich": sandwich_suite,
    "end2end": end2end_suite,
    "tree": tree_suite,
}
