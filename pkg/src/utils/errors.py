"""Exception hierarchy shared by the library and the CLI."""


class GibbsSamplerError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(GibbsSamplerError, ValueError):
    """Operands live on different numbers of sites or dimensions."""


class InvalidInputError(GibbsSamplerError, ValueError):
    """A parameter, file or record is malformed."""


class PreconditionError(GibbsSamplerError, ValueError):
    """An operation was called on a state it is not defined for."""


class ThresholdError(GibbsSamplerError, ValueError):
    """Inverse temperature above the gate of the requested mode."""

    def __init__(self, beta: float, threshold: float, mode: str):
        self.beta = beta
        self.threshold = threshold
        self.mode = mode
        super().__init__(
            f"beta={beta:.6g} exceeds the {mode} threshold {threshold:.6g} "
            f"(pass --unsafe-beta to override)"
        )


class InvariantError(GibbsSamplerError, AssertionError):
    """An internal invariant was violated; indicates a bug or an unsafe override."""


class ResourceError(GibbsSamplerError, RuntimeError):
    """A size cap was exceeded (dense oracle, polymer size, cluster budget)."""

    def __init__(self, message: str, achieved: int | None = None):
        self.achieved = achieved
        super().__init__(message)
