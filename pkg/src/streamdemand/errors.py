"""Exception hierarchy shared across the toolkit."""


class StreamDemandError(Exception):
    """Base class for all toolkit errors."""


class DomainError(StreamDemandError, ValueError):
    """An argument is outside its mathematical domain."""


class ConfigurationError(StreamDemandError):
    """Inputs are individually valid but mutually inconsistent (shape, mapping, ...)."""


class CoverageError(StreamDemandError):
    """An audience covering fails to cover the population."""

    def __init__(self, message, uncovered=None, week=None):
        super().__init__(message)
        self.uncovered = sorted(uncovered) if uncovered is not None else []
        self.week = week


class FitError(StreamDemandError):
    """A model fit failed (non-convergence, degenerate data, ...)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class SeparationError(FitError):
    """Logistic likelihood is degenerate (complete separation)."""


class DegenerateFitError(FitError):
    """The series does not support the requested number of phases."""


class PhaseSupportError(FitError):
    """A phase contains too few weeks to estimate its parameters."""


class InfeasibleError(StreamDemandError):
    """An optimization problem has no feasible point."""


class EmptyCurveError(StreamDemandError):
    """No usable post-release observations for a song."""


class StoreError(StreamDemandError):
    """Project-store conflict or missing object."""

    def __init__(self, message, conflict=False):
        super().__init__(message)
        self.conflict = conflict
