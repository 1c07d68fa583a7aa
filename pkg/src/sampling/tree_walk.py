"""Random walk on the sample tree of the pinning process.

Nodes are labelled by (S, configuration). Moving to a child runs one
``pin_step`` and keys the child by its random transcript, so the children of
a node appear with their natural probability. Weighting each node by a
constant-factor estimate of tr(sigma(X) restricted-Gibbs part) turns the
lazy walk into a reversible chain whose leaf marginal is proportional to
tr(sigma(X_leaf)) times the natural weight.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

import numpy as np
import scipy.linalg

from src.core.hamiltonian import BetaMode, Hamiltonian, critical_beta
from src.counting.cluster_expansion import log_partition_report
from src.sampling.monomial_sampler import default_t_max
from src.sampling.pinning import (
    Configuration,
    PinState,
    config_trace,
    evaluate_config_dense,
    initial_state,
    pin_step,
)
from src.sampling.stabilizer_output import ProductState, sample_state
from src.utils.errors import InvalidInputError, InvariantError, PreconditionError, ResourceError, ThresholdError
from src.utils.randomness import RecordingChooser, as_chooser, enumerate_branches

logger = logging.getLogger(__name__)

MOVE_PROBABILITY = 0.01
RATIO_WARNING = 10.0
DEFAULT_C1 = 4.0
DEFAULT_C2 = 8.0
CALIBRATED_C1 = 0.5
CALIBRATED_C2 = 2.0
DEFAULT_ETA_RATIO = 0.01


@dataclass(eq=False)
class SampleTreeNode:
    state: PinState
    parent: "SampleTreeNode | None" = None
    depth: int = 0
    key: tuple[int, ...] = ()
    omega: float = 1.0
    children: dict[tuple[int, ...], "SampleTreeNode"] = field(default_factory=dict)
    r_hat: float | None = None
    is_leaf: bool = False

    @property
    def S(self) -> frozenset[int]:
        return self.state.S

    @property
    def config(self) -> Configuration:
        return self.state.config

    def path(self) -> list[tuple[int, ...]]:
        keys = []
        node = self
        while node.parent is not None:
            keys.append(node.key)
            node = node.parent
        return keys[::-1]


def log_branching_bound(n: int, epsilon: float, delta_graph: int) -> float:
    """log of (40 ln(n/eps)(Δ+1))^{20 ln(n/eps)}, the child-count bound."""
    L = max(math.log(max(n, 1) / epsilon), 1.0)
    return 20 * L * math.log(40 * L * (delta_graph + 1))


class Schedule(str, Enum):
    """How step and epoch counts are derived when not given explicitly.

    ``bound`` follows the conductance bound, c1 n^3 (ln(n/eps) + ln k)
    steps per epoch. ``calibrated`` uses desk-scale counts,
    c1 n ln(n/eps) / move_probability steps per epoch.
    """

    BOUND = "bound"
    CALIBRATED = "calibrated"


_SCHEDULE_CONSTANTS = {
    Schedule.BOUND: (DEFAULT_C1, DEFAULT_C2),
    Schedule.CALIBRATED: (CALIBRATED_C1, CALIBRATED_C2),
}


@dataclass(frozen=True)
class WalkParams:
    epsilon: float
    delta: float
    steps_per_epoch: int
    max_epochs: int
    t_max: int | None
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    eta_ratio: float = DEFAULT_ETA_RATIO
    move_probability: float = MOVE_PROBABILITY
    ratio_warning: float = RATIO_WARNING

    def __post_init__(self):
        if not (self.epsilon > 0 and 0 < self.delta < 1):
            raise InvalidInputError(f"need epsilon > 0 and 0 < delta < 1, got {self.epsilon}, {self.delta}")
        if self.steps_per_epoch < 1 or self.max_epochs < 1:
            raise InvalidInputError("steps_per_epoch and max_epochs must be positive")
        if not 0 < self.eta_ratio < 1:
            raise InvalidInputError(f"eta_ratio must lie in (0, 1), got {self.eta_ratio}")
        if not 0 < self.move_probability <= 0.5:
            raise InvalidInputError(f"move_probability must lie in (0, 0.5], got {self.move_probability}")

    @classmethod
    def from_defaults(
        cls,
        n: int,
        delta_graph: int,
        epsilon: float,
        delta: float,
        c1: float | None = None,
        c2: float | None = None,
        eta_ratio: float = DEFAULT_ETA_RATIO,
        steps_per_epoch: int | None = None,
        max_epochs: int | None = None,
        t_max: int | None = None,
        move_probability: float = MOVE_PROBABILITY,
        ratio_warning: float = RATIO_WARNING,
        schedule: Schedule | str = Schedule.BOUND,
    ) -> "WalkParams":
        """Step and epoch counts from the chosen schedule; overrides win.

        ``c1``/``c2`` default to the schedule's own constants.
        """
        if epsilon <= 0:
            raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
        if not 0 < delta < 1:
            raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
        try:
            schedule = Schedule(schedule)
        except ValueError:
            raise InvalidInputError(
                f"Unknown walk schedule: {schedule}. Available: {', '.join(s.value for s in Schedule)}"
            ) from None
        base_c1, base_c2 = _SCHEDULE_CONSTANTS[schedule]
        c1 = base_c1 if c1 is None else c1
        c2 = base_c2 if c2 is None else c2
        n_eff = max(n, 1)
        log_n = math.log(n_eff / epsilon)
        if steps_per_epoch is None:
            if schedule is Schedule.BOUND:
                log_k = log_branching_bound(n_eff, epsilon, delta_graph)
                steps_per_epoch = math.ceil(c1 * n_eff**3 * (log_n + log_k))
            else:
                steps_per_epoch = math.ceil(c1 * n_eff * max(log_n, 1.0) / move_probability)
        if max_epochs is None:
            max_epochs = math.ceil(c2 * n_eff * math.log(1 / delta))
        if t_max is None:
            t_max = default_t_max(n_eff, epsilon / 4)
        return cls(
            epsilon, delta, steps_per_epoch, max(max_epochs, 1), t_max, c1, c2, eta_ratio, move_probability, ratio_warning
        )


class PartitionMemo:
    """exp(z_hat) of restricted Hamiltonians, shared by every walk in the process."""

    def __init__(self):
        self._values: dict[tuple, float] = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: tuple) -> float | None:
        value = self._values.get(key)
        if value is None:
            self.misses += 1
        else:
            self.hits += 1
        return value

    def put(self, key: tuple, value: float) -> None:
        self._values[key] = value

    def clear(self) -> None:
        self._values.clear()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._values)


def get_partition_memo() -> PartitionMemo:
    """Get or create the process-wide partition memo."""
    if not hasattr(get_partition_memo, "_instance"):
        get_partition_memo._instance = PartitionMemo()
    return get_partition_memo._instance


def make_node(h: Hamiltonian, state: PinState, parent: SampleTreeNode | None, key, omega: float) -> SampleTreeNode:
    depth = 0 if parent is None else parent.depth + 1
    if depth > h.n:
        raise InvariantError(f"sample tree depth {depth} exceeds n={h.n}")
    return SampleTreeNode(state, parent, depth, key, omega, is_leaf=not h.restricted_terms(state.S))


def _fingerprint(h: Hamiltonian) -> tuple:
    return (h.n, tuple((t.coeff, t.string.x_bits, t.string.z_bits, t.string.phase_exp) for t in h.terms))


def _split_blocks(h: Hamiltonian, node: SampleTreeNode, restricted) -> tuple[Configuration, frozenset[int]]:
    """Blocks other than the active one, and their joint formal support."""
    blocks = node.config.blocks
    if blocks:
        last = blocks[-1].monomial.formal_support
        if any(h.supports[a] & last for a in restricted):
            blocks = blocks[:-1]
    rest = Configuration(blocks)
    return rest, rest.formal_support


def estimate_ratio(
    node: SampleTreeNode,
    h: Hamiltonian,
    beta: float,
    eta_ratio: float = DEFAULT_ETA_RATIO,
    memo: PartitionMemo | None = None,
    unsafe_beta: bool = False,
) -> float:
    """Constant-factor estimate of kappa/omega at an internal node.

    The inactive blocks contribute their exact trace; the unpinned part
    contributes exp(z_hat) of the restricted Hamiltonian over every site
    outside those blocks. The active block is left out.
    """
    restricted = h.restricted_terms(node.S)
    if not restricted:
        raise PreconditionError("estimate_ratio needs an internal node")
    rest, rest_support = _split_blocks(h, node, restricted)
    memo = get_partition_memo() if memo is None else memo
    key = (_fingerprint(h), beta, eta_ratio, node.S, rest_support)
    z = memo.get(key)
    if z is None:
        report = log_partition_report(
            h.restrict(restricted), beta, eta_ratio, n_sites=h.n - len(rest_support), unsafe_beta=unsafe_beta
        )
        z = math.exp(report.z_hat)
        memo.put(key, z)
    return config_trace(rest, len(rest_support)) * z


def leaf_ratio(node: SampleTreeNode, h: Hamiltonian) -> float:
    """Exact tr sigma(X) at a leaf."""
    if not node.is_leaf:
        raise PreconditionError("leaf_ratio called on an internal node")
    return config_trace(node.config, h.n)


def check_sampling_beta(h: Hamiltonian, beta: float, unsafe_beta: bool = False) -> None:
    threshold = critical_beta(h, BetaMode.SAMPLING)
    if beta < 0:
        raise InvalidInputError(f"beta must be >= 0, got {beta}")
    if beta > threshold:
        if not unsafe_beta:
            raise ThresholdError(beta, threshold, BetaMode.SAMPLING.value)
        logger.warning("running above the sampling threshold (beta=%.6g > %.6g)", beta, threshold)


@dataclass
class WalkResult:
    leaf: SampleTreeNode | None
    epochs_used: int
    steps: int
    ratio_queries: int
    moves: dict[str, int] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.leaf is None

    def summary(self) -> dict:
        return {
            "epochs_used": self.epochs_used,
            "leaf_depth": None if self.leaf is None else self.leaf.depth,
            "ratio_queries": self.ratio_queries,
            "steps": self.steps,
            "moves": dict(self.moves),
        }


class TreeWalker:
    """Lazily grown sample tree plus the walk over it.

    r_hat is computed once per node. Children are cached by transcript.
    """

    def __init__(
        self,
        h: Hamiltonian,
        beta: float,
        t_max: int | None,
        eta_ratio: float = DEFAULT_ETA_RATIO,
        move_probability: float = MOVE_PROBABILITY,
        memo: PartitionMemo | None = None,
        unsafe_beta: bool = False,
        ratio_warning: float = RATIO_WARNING,
    ):
        self.h = h
        self.beta = beta
        self.t_max = t_max
        self.eta_ratio = eta_ratio
        self.move_probability = move_probability
        self.memo = get_partition_memo() if memo is None else memo
        self.unsafe_beta = unsafe_beta
        self.ratio_warning = ratio_warning
        self.ratio_queries = 0
        self.root = self._node(initial_state(h, beta, t_max), None, (), 1.0)

    def _node(self, state: PinState, parent, key, omega) -> SampleTreeNode:
        return make_node(self.h, state, parent, key, omega)

    def ratio(self, node: SampleTreeNode) -> float:
        if node.r_hat is None:
            self.ratio_queries += 1
            if node.is_leaf:
                node.r_hat = leaf_ratio(node, self.h)
            else:
                node.r_hat = estimate_ratio(
                    node, self.h, self.beta, self.eta_ratio, self.memo, self.unsafe_beta
                )
            if node.r_hat <= 0:
                raise InvariantError(f"non-positive weight estimate {node.r_hat} at depth {node.depth}")
        return node.r_hat

    def child(self, node: SampleTreeNode, chooser) -> SampleTreeNode:
        """Sample a child with its natural probability; reuse it if seen before."""
        rec = RecordingChooser(chooser)
        state = pin_step(self.h, node.state, rec)
        key = rec.key()
        found = node.children.get(key)
        if found is None:
            found = self._node(state, node, key, node.omega * rec.probability)
            node.children[key] = found
        return found

    def move_probabilities(self, node: SampleTreeNode) -> tuple[float, float]:
        """(to parent, to a fresh child)."""
        p = self.move_probability
        up = 0.0
        if node.parent is not None:
            ratio = self.ratio(node.parent) / self.ratio(node)
            if ratio > self.ratio_warning:
                logger.warning("weight ratio %.3g above %g at depth %d", ratio, self.ratio_warning, node.depth)
            up = p * ratio
        down = 0.0 if node.is_leaf else p
        if up + down > 1.0:
            raise InvariantError(f"move probabilities {up:.3g} + {down:.3g} exceed 1")
        return up, down

    def step(self, node: SampleTreeNode, chooser) -> tuple[SampleTreeNode, str]:
        up, down = self.move_probabilities(node)
        match chooser.pick([up, down, 1.0 - up - down]):
            case 0:
                return node.parent, "up"
            case 1:
                return self.child(node, chooser), "down"
            case _:
                return node, "stay"


def run_walk(
    h: Hamiltonian,
    beta: float,
    params: WalkParams,
    rng,
    telemetry: Callable[[dict], None] | None = None,
    walker: TreeWalker | None = None,
    unsafe_beta: bool = False,
) -> WalkResult:
    """Walk from the root; after each epoch stop if the walker sits on a leaf.

    The position carries over between epochs. Returns a result whose leaf
    is None when every epoch ended on an internal node.
    """
    check_sampling_beta(h, beta, unsafe_beta)
    chooser = as_chooser(rng)
    if walker is None:
        walker = TreeWalker(
            h,
            beta,
            params.t_max,
            params.eta_ratio,
            params.move_probability,
            unsafe_beta=unsafe_beta,
            ratio_warning=params.ratio_warning,
        )
    node = walker.root
    moves = {"up": 0, "down": 0, "stay": 0}
    steps = 0
    if node.is_leaf:
        return WalkResult(node, 0, 0, walker.ratio_queries, moves)

    for epoch in range(1, params.max_epochs + 1):
        for _ in range(params.steps_per_epoch):
            prev = node
            node, move = walker.step(node, chooser)
            steps += 1
            moves[move] += 1
            if telemetry is not None:
                telemetry(
                    {
                        "step": steps,
                        "depth": node.depth,
                        "move": move,
                        "r_hat_ratio": None if node is prev else walker.ratio(node) / walker.ratio(prev),
                    }
                )
        if node.is_leaf:
            logger.debug("walk reached a leaf at depth %d after %d epochs", node.depth, epoch)
            return WalkResult(node, epoch, steps, walker.ratio_queries, moves)
    logger.info("walk ended off a leaf after %d epochs", params.max_epochs)
    return WalkResult(None, params.max_epochs, steps, walker.ratio_queries, moves)


def sample_gibbs_state(
    h: Hamiltonian,
    beta: float,
    epsilon: float,
    delta: float,
    rng,
    params: WalkParams | None = None,
    unsafe_beta: bool = False,
) -> ProductState | None:
    """One product state from an approximate Gibbs mixture, or None on walk failure."""
    chooser = as_chooser(rng)
    if params is None:
        params = WalkParams.from_defaults(h.n, h.degree, epsilon, delta)
    result = run_walk(h, beta, params, chooser, unsafe_beta=unsafe_beta)
    if result.failed:
        return None
    return sample_state(result.leaf.config, h.n, chooser)


# --------------------------------------------------------------------------- #
# Exhaustive trees for small instances


@dataclass
class SampleTree:
    root: SampleTreeNode
    nodes: list[SampleTreeNode]

    @property
    def leaves(self) -> list[SampleTreeNode]:
        return [v for v in self.nodes if v.is_leaf]

    def __iter__(self) -> Iterator[SampleTreeNode]:
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)


def enumerate_sample_tree(
    h: Hamiltonian,
    beta: float,
    t_max: int,
    max_nodes: int = 100_000,
) -> SampleTree:
    """Every node of the sample tree at finite t_max, with its natural weight."""
    if t_max is None:
        raise InvalidInputError("full enumeration needs a finite t_max")
    root = make_node(h, initial_state(h, beta, t_max), None, (), 1.0)
    nodes = [root]
    frontier = [root]
    while frontier:
        node = frontier.pop()
        if node.is_leaf:
            continue
        for branch in enumerate_branches(lambda ch, s=node.state: pin_step(h, s, ch)):
            child = make_node(h, branch.result, node, branch.transcript, node.omega * branch.probability)
            node.children[branch.transcript] = child
            nodes.append(child)
            frontier.append(child)
        if len(nodes) > max_nodes:
            raise ResourceError(f"sample tree exceeds {max_nodes} nodes", achieved=len(nodes))
    return SampleTree(root, nodes)


def tree_ratios(tree: SampleTree, h: Hamiltonian, beta: float, eta_ratio: float = DEFAULT_ETA_RATIO) -> np.ndarray:
    """r_hat for every node of an enumerated tree, in tree order."""
    out = np.empty(len(tree))
    for i, node in enumerate(tree):
        if node.r_hat is None:
            node.r_hat = leaf_ratio(node, h) if node.is_leaf else estimate_ratio(node, h, beta, eta_ratio)
        out[i] = node.r_hat
    return out


def transition_matrix(
    tree: SampleTree,
    h: Hamiltonian,
    beta: float,
    eta_ratio: float = DEFAULT_ETA_RATIO,
    move_probability: float = MOVE_PROBABILITY,
) -> np.ndarray:
    """Row-stochastic P[u, v] of the walk restricted to an enumerated tree."""
    r = tree_ratios(tree, h, beta, eta_ratio)
    index = {id(v): i for i, v in enumerate(tree)}
    P = np.zeros((len(tree), len(tree)))
    for i, node in enumerate(tree):
        if node.parent is not None:
            P[i, index[id(node.parent)]] = move_probability * r[index[id(node.parent)]] / r[i]
        if not node.is_leaf:
            for child in node.children.values():
                P[i, index[id(child)]] += move_probability * child.omega / node.omega
        stay = 1.0 - P[i].sum()
        if stay < -1e-12:
            raise InvariantError(f"row {i} of the transition matrix sums above 1")
        P[i, i] += stay
    return P


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Left eigenvector of P for eigenvalue 1, normalized to sum 1."""
    w, vl = scipy.linalg.eig(P, left=True, right=False)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(vl[:, i])
    pi = pi / pi.sum()
    return pi


def leaf_average_density(tree: SampleTree, n: int) -> np.ndarray:
    """sum over leaves of (kappa/sum kappa) sigma/tr sigma, with kappa = omega tr sigma."""
    total = None
    mass = 0.0
    for leaf in tree.leaves:
        sigma = evaluate_config_dense(leaf.config, n)
        total = leaf.omega * sigma if total is None else total + leaf.omega * sigma
        mass += leaf.omega * config_trace(leaf.config, n)
    if total is None:
        raise InvalidInputError("tree has no leaves")
    return total / mass
