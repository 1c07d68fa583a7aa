"""Utility modules for the Gibbs sampler."""

from .errors import (
    GibbsSamplerError,
    DimensionError,
    InvalidInputError,
    PreconditionError,
    ThresholdError,
    InvariantError,
    ResourceError,
)
from .load_config import load_config, get_settings, setup_logging
from .randomness import (
    Chooser,
    RngChooser,
    RecordingChooser,
    enumerate_branches,
    as_chooser,
    sample_rng,
)

__all__ = [
    "GibbsSamplerError",
    "DimensionError",
    "InvalidInputError",
    "PreconditionError",
    "ThresholdError",
    "InvariantError",
    "ResourceError",
    "load_config",
    "get_settings",
    "setup_logging",
    "Chooser",
    "RngChooser",
    "RecordingChooser",
    "enumerate_branches",
    "as_chooser",
    "sample_rng",
]
