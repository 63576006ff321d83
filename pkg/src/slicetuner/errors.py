"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems -> 2,
oracle/trainer problems -> 3, numerical failures -> 4.
"""


class SliceTunerError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SliceTunerError, ValueError):
    """Invalid or unreadable experiment configuration."""


class InsufficientDataError(SliceTunerError, ValueError):
    """Too few points to identify the requested curve parameters."""


class DegenerateFitError(SliceTunerError, ValueError):
    """Curve data carries no usable signal (e.g. all losses zero)."""


class InvalidProblemError(SliceTunerError, ValueError):
    """Allocation problem contains non-finite or out-of-range parameters."""


class NumericalError(SliceTunerError, RuntimeError):
    """A solver failed in a way that cannot be recovered."""


class OracleError(SliceTunerError, RuntimeError):
    """Base class for loss-oracle failures."""


class PoolExhaustedError(OracleError):
    """A slice's acquirable pool cannot satisfy the request."""

    def __init__(self, slice_id: str, message: str | None = None):
        self.slice_id = slice_id
        super().__init__(message or f"pool exhausted for slice {slice_id!r}")


class TrainerError(OracleError):
    """Base class for external-trainer failures."""


class TrainerTimeoutError(TrainerError):
    """The trainer did not answer within the configured timeout."""


class TrainerCrashedError(TrainerError):
    """The trainer process exited unexpectedly (nonzero status or EOF)."""


class TrainerProtocolError(TrainerError):
    """The trainer sent a malformed or out-of-order message.

    The offending raw payload, when available, is kept on ``payload``.
    """

    def __init__(self, message: str, payload: str | None = None):
        self.payload = payload
        if payload is not None:
            message = f"{message} (payload: {payload!r})"
        super().__init__(message)
