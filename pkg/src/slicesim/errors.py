"""Exception taxonomy shared across the simulator."""


class SliceSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SliceSimError):
    """A config file or parameter violates an invariant."""


class CapacityError(SliceSimError):
    """A request asks for more than the platform physically has.

    Distinct from a transient no-fit: no amount of waiting will help.
    """


class ValidationError(SliceSimError):
    """A catalog, scenario, or stream failed structural validation."""


class SimulationLogicError(SliceSimError):
    """Internal consistency violation; indicates a bug, fail fast."""


class ComparabilityError(SliceSimError):
    """Traces being compared do not share scenario and seed."""
