import json
import logging
from contextlib import ExitStack
from functools import partial

from src.core.hamiltonian_io import read_hamiltonian
from src.sampling.tree_walk import WalkParams, run_walk
from src.utils.load_config import get_settings

logger = logging.getLogger(__name__)


def walk_params(h, args, config: dict) -> WalkParams:
    """Walk parameters from the config, with CLI overrides."""
    sampling = get_settings(config).sampling
    walk = get_settings(config).walk
    return WalkParams.from_defaults(
        h.n,
        h.degree,
        args.eps if args.eps is not None else sampling.epsilon,
        args.delta if args.delta is not None else sampling.delta,
        c1=walk.c1,
        c2=walk.c2,
        eta_ratio=walk.eta_ratio,
        steps_per_epoch=getattr(args, "steps_per_epoch", None) or walk.steps_per_epoch,
        max_epochs=getattr(args, "max_epochs", None) or walk.max_epochs,
        move_probability=walk.move_probability,
        ratio_warning=walk.ratio_warning,
        schedule=walk.schedule,
    )


def _write_record(stream, record: dict) -> None:
    stream.write(json.dumps(record) + "\n")


def cmd_walk(args, config: dict) -> int:
    """Run one tree walk and print its summary; optionally stream per-step telemetry."""
    h = read_hamiltonian(args.hamiltonian)
    params = walk_params(h, args, config)

    with ExitStack() as stack:
        telemetry = None
        if args.telemetry:
            stream = stack.enter_context(open(args.telemetry, "w", encoding="utf-8"))
            telemetry = partial(_write_record, stream)

        result = run_walk(h, args.beta, params, args.seed, telemetry=telemetry, unsafe_beta=args.unsafe_beta)

    summary = result.summary()
    print(json.dumps(summary, indent=2))
    if result.failed:
        logger.warning("walk did not end on a leaf within %d epochs", params.max_epochs)
        return 1
    return 0
