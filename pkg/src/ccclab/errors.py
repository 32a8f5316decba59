"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """Requested system size exceeds the dense-solver cap."""


class InvariantError(RuntimeError):
    """A hard numerical invariant was violated."""


class CacheError(RuntimeError):
    """Eigendata cache is corrupt or inconsistent."""


class ConfigError(ValueError):
    """Experiment configuration failed schema validation."""
