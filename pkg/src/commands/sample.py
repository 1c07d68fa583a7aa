import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import ExitStack

from src.commands.walk import walk_params
from src.core.hamiltonian import Hamiltonian
from src.core.hamiltonian_io import read_hamiltonian
from src.sampling.tree_walk import WalkParams, check_sampling_beta, sample_gibbs_state
from src.utils.errors import InvalidInputError, ResourceError
from src.utils.load_config import get_settings
from src.utils.randomness import sample_rng

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# Per-process state for pool workers
_WORKER: dict = {}


def draw_sample(
    h: Hamiltonian,
    beta: float,
    params: WalkParams,
    seed: int,
    index: int,
    max_redraws: int,
    unsafe_beta: bool = False,
) -> tuple[dict, int]:
    """Sample ``index`` of the stream, redrawn from the same generator on walk failure.

    Returns:
        (record, number of failed walks before the accepted one)
    """
    rng = sample_rng(seed, index)
    for failures in range(max_redraws + 1):
        state = sample_gibbs_state(h, beta, params.epsilon, params.delta, rng, params, unsafe_beta)
        if state is not None:
            return {"index": index, **state.to_record(seed=[seed, index])}, failures
        logger.warning("sample %d: walk failed, redrawing (%d so far)", index, failures + 1)
    raise ResourceError(f"sample {index}: no leaf after {max_redraws} redraws")


def _init_worker(path: str, beta: float, params: WalkParams, seed: int, max_redraws: int, unsafe_beta: bool) -> None:
    _WORKER.update(
        h=read_hamiltonian(path),
        beta=beta,
        params=params,
        seed=seed,
        max_redraws=max_redraws,
        unsafe_beta=unsafe_beta,
    )


def _draw_in_worker(index: int) -> tuple[dict, int]:
    w = _WORKER
    return draw_sample(w["h"], w["beta"], w["params"], w["seed"], index, w["max_redraws"], w["unsafe_beta"])


def cmd_sample(args, config: dict) -> int:
    """Write a header line and one product-state record per sample, in index order."""
    settings = get_settings(config).sampling
    if args.n_samples < 0:
        raise InvalidInputError(f"--n-samples must be >= 0, got {args.n_samples}")
    if args.seed is None:
        raise InvalidInputError("sample needs --seed")

    h = read_hamiltonian(args.hamiltonian)
    check_sampling_beta(h, args.beta, args.unsafe_beta)
    params = walk_params(h, args, config)
    workers = args.workers or settings.workers

    header = {
        "schema_version": SCHEMA_VERSION,
        "n": h.n,
        "beta": args.beta,
        "epsilon": params.epsilon,
        "delta": params.delta,
        "n_samples": args.n_samples,
        "seed": args.seed,
    }

    failures = 0
    with ExitStack() as stack:
        out = stack.enter_context(open(args.out, "w", encoding="utf-8")) if args.out else sys.stdout
        out.write(json.dumps(header) + "\n")

        if workers > 1 and args.n_samples > 1:
            pool = stack.enter_context(
                ProcessPoolExecutor(
                    max_workers=workers,
                    initializer=_init_worker,
                    initargs=(args.hamiltonian, args.beta, params, args.seed, settings.max_redraws, args.unsafe_beta),
                )
            )
            results = pool.map(_draw_in_worker, range(args.n_samples), chunksize=max(1, args.n_samples // (4 * workers)))
        else:
            results = (
                draw_sample(h, args.beta, params, args.seed, i, settings.max_redraws, args.unsafe_beta)
                for i in range(args.n_samples)
            )

        for record, redraws in results:
            failures += redraws
            out.write(json.dumps(record) + "\n")

    logger.info("wrote %d samples; %d failed walks were redrawn", args.n_samples, failures)
    return 0
