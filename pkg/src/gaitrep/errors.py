"""Exception types shared across the package."""


class GaitRepError(Exception):
    """Base class for all gaitrep errors."""


class ValidationError(GaitRepError):
    """Input data or parameters violate a documented invariant."""


class ParseError(GaitRepError):
    """A file could not be parsed (malformed row, bad header, ...)."""


class TooFewSamples(ValidationError):
    """Not enough samples for the requested numerical operation."""


class OutOfDomain(GaitRepError):
    """A query time lies outside the profile or plan horizon."""


class DomainMismatch(GaitRepError):
    """Two time series cover different horizons and cannot be compared."""


class InfeasibleBounds(GaitRepError):
    """Box constraints are empty (lower bound above upper bound)."""


class NotStabilizable(GaitRepError):
    """No stabilizing Riccati solution exists for the given pair."""


class NumericalFailure(GaitRepError):
    """An iterative solve or decomposition failed to converge."""


class SimulationDiverged(GaitRepError):
    """Closed-loop state grew past the configured divergence bound."""


class MaxIterationsWarning(UserWarning):
    """Optimizer hit its evaluation budget; best-so-far result returned."""
