import logging

from src.core.hamiltonian import BetaMode, critical_beta
from src.core.hamiltonian_io import dumps, write_hamiltonian
from src.models.families import create_family

logger = logging.getLogger(__name__)

# Size and coefficient arguments each family accepts
FAMILY_PARAMS = {
    "chain-tfim": ("n", "J", "g"),
    "grid-zz": ("rows", "cols", "J"),
    "heisenberg-chain": ("n", "J"),
    "random-klocal": ("n", "m", "K", "low", "high", "seed"),
}


def family_params(family: str, args) -> dict:
    """Pick the arguments that were given and that the family takes."""
    names = FAMILY_PARAMS.get(family, ())
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def cmd_gen(args, config: dict) -> int:
    """Generate a benchmark Hamiltonian file.

    Args:
        args: Parsed CLI arguments (family, size parameters, --out)
        config: Loaded configuration

    Returns:
        Process exit code.
    """
    h = create_family(args.family, **family_params(args.family, args)).build()
    summary = {
        "family": args.family,
        "n": h.n,
        "terms": h.m,
        "degree": h.degree,
        "locality": h.locality,
        **{f"beta_{mode.value}": critical_beta(h, mode) for mode in BetaMode},
    }

    if args.out:
        write_hamiltonian(h, args.out)
        for key, value in summary.items():
            print(f"{key}: {value}")
    else:
        print(dumps(h), end="")
        logger.info("generated %s", summary)
    return 0
