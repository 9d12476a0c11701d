"""Exception hierarchy for the magspec package."""


class MagspecError(Exception):
    """Base class for all magspec-specific errors."""


class ConfigError(MagspecError):
    """Invalid configuration; message names the offending key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class NearDegenerateFrames(MagspecError):
    """Eigen-intensities nearly coincide; eigenframes are ill-conditioned.

    The intensities are still available on the exception (`f1`, `f2`).
    """

    def __init__(self, f1, f2, message="eigenframes ill-conditioned"):
        self.f1 = f1
        self.f2 = f2
        super().__init__(f"{message}: f2 - f1 = {f2 - f1:.3e}")


class OnLambda(MagspecError):
    """Point lies on the central curve where the magnetic line degenerates."""


class RAtZero(MagspecError):
    """Cylindrical radius vanished where a positive radius is required."""


class StepUnderflow(MagspecError):
    """Adaptive integrator needed a step below the hard floor."""


class BlowUp(MagspecError):
    """Trajectory left the trusted domain (|state| too large)."""


class TooShort(MagspecError):
    """Trajectory too short for the requested window statistics."""


class NoRoot(MagspecError):
    """Bracketed search found no sign change."""


class QuadratureNotConverged(MagspecError):
    """Successive quadrature refinements disagree beyond tolerance."""

    def __init__(self, value, error, tol):
        self.value = value
        self.error = error
        self.tol = tol
        super().__init__(
            f"quadrature error estimate {error:.3e} exceeds tolerance {tol:.3e}"
        )


class DomainTooSmall(MagspecError):
    """Eigenfunction tails do not decay at the grid boundary."""


class GridTooCoarse(MagspecError):
    """Richardson consistency check between N and N/2 grids failed."""


class InsufficientData(MagspecError):
    """Not enough usable records for the requested fit."""


class MalformedRecord(MagspecError):
    """A stored record line failed to parse."""

    def __init__(self, line_number, reason):
        self.line_number = line_number
        super().__init__(f"record line {line_number}: {reason}")
