"""
Exception hierarchy for the simulation services.

Every error raised on purpose by the services derives from SimulationError so
management commands can report it and exit cleanly.
"""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class DimensionMismatchError(SimulationError, ValueError):
    """Operands have incompatible shapes."""


class DimensionOverflowError(SimulationError):
    """A matrix would exceed settings.SIMULATION_MAX_DIMENSION."""


class NotHermitianError(SimulationError, ValueError):
    """An operator expected to be Hermitian is not, within tolerance."""


class EigensolverError(SimulationError):
    """The dense Hermitian eigensolver did not converge."""


class TruncationSafetyError(SimulationError):
    """A coherent preparation would put too much weight near the Fock cutoff."""


class GridError(SimulationError, ValueError):
    """A time grid, step count or series order is unusable."""


class InvalidStateError(SimulationError, ValueError):
    """A state, measure or data series violates its invariants."""


class ConfigurationError(SimulationError):
    """An experiment configuration does not match the schema."""


class SweepCellError(SimulationError):
    """A failure inside one (epsilon, t) cell of a sweep."""

    def __init__(self, epsilon, t, cause):
        self.epsilon = epsilon
        self.t = t
        self.cause = cause
        super().__init__(f"sweep cell (epsilon={epsilon}, t={t}) failed: {cause}")
