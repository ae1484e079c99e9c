class OrbilearnError(Exception):
    """
    Base class for every error raised by the library.

    Attributes:
        field: Name of the offending input (argument, JSON key or config
            field), or None when the error is not tied to one.
    """

    def __init__(self, message: str, *, field: str | None = None) -> None:
        super().__init__(message)
        self.field = field


class GraphConstructionError(OrbilearnError, ValueError):
    """Malformed vertex/edge input for an attributed graph."""


class ShapeMismatchError(OrbilearnError, ValueError):
    """Order or attribute dimension of two operands disagree."""


class SolverCapExceededError(OrbilearnError):
    """Exact enumeration was requested beyond the configured order cap."""


class InconsistentSolverError(OrbilearnError):
    """The kernel value is inconsistent with the lengths (negative radicand)."""


class EmptySampleError(OrbilearnError, ValueError):
    """A stream, sample, codebook or mixture had no elements."""


class InvalidLabelError(OrbilearnError, ValueError):
    """Classification label outside {-1, +1}."""


class ConfigurationError(OrbilearnError, ValueError):
    """Invalid algorithm or experiment configuration."""


class IterationError(OrbilearnError):
    """An error raised inside an SGG step, tagged with the iteration index."""

    def __init__(self, message: str, *, iteration: int) -> None:
        super().__init__(f"iteration {iteration}: {message}", field="iterations")
        self.iteration = iteration
