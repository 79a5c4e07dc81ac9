"""Exceptions raised by the gidx library.

Every error carries a machine-readable ``code`` and the process exit code the
CLI uses for it.
"""
from typing import Optional


class GIndexError(Exception):
    """Base class for all library errors."""

    code = "error"
    exit_code = 1

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual

    def to_dict(self) -> dict:
        payload = {"code": self.code, "message": str(self)}
        if self.residual is not None:
            payload["residual"] = self.residual
        return payload


class ChartOverflowError(GIndexError):
    code = "chart-overflow"


class UnsupportedActionError(GIndexError):
    code = "unsupported-action"


class ActionMismatchError(GIndexError):
    code = "action-mismatch"


class NotInvertibleError(GIndexError):
    code = "not-invertible-at-tolerance"
    exit_code = 2


class SupportExceededError(GIndexError):
    code = "support-exceeded"
    exit_code = 3


class WindowTooSmallError(GIndexError):
    code = "window-too-small"


class InverseResidualError(GIndexError):
    code = "inverse-residual-too-large"


class NotCyclicError(GIndexError):
    code = "not-cyclic"


class QuadratureError(GIndexError):
    code = "quadrature-failure"


class BandwidthError(GIndexError):
    code = "bandwidth-exceeds-truncation"


class NoStabilizationError(GIndexError):
    code = "no-stabilization"
    exit_code = 3


class SnapError(GIndexError):
    code = "snap-failure"
    exit_code = 3


class VanishingSymbolError(GIndexError):
    code = "vanishing-symbol"
    exit_code = 2


class PreconditionError(GIndexError):
    code = "precondition-failed"
    exit_code = 2


class InsufficientDecayError(GIndexError):
    code = "insufficient-decay"


class NotEllipticError(GIndexError):
    code = "not-elliptic"
    exit_code = 2


class InconclusiveError(GIndexError):
    code = "inconclusive"
    exit_code = 3


class ConfigError(GIndexError):
    code = "config-error"
    exit_code = 4
