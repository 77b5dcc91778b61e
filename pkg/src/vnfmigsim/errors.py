"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """A configuration value is out of its documented range."""


class InfeasiblePlacementError(RuntimeError):
    """Placing or routing would drive a residual capacity negative."""


class SaturationError(RuntimeError):
    """Processing delay requested for a server at CPU utilization >= 1."""


class IncompleteMappingError(RuntimeError):
    """A metric was requested for an FG that is not fully placed and routed."""


class CommandError(ValueError):
    """A migration command references an inactive FG or invalid indices."""


class TrainingError(RuntimeError):
    """A training step produced a non-finite loss or gradient."""


class SamplingError(RuntimeError):
    """A mini-batch was requested from empty physical buffers."""


class GenerationError(RuntimeError):
    """Synthetic experience generation was requested without seed samples."""
