"""Exception hierarchy shared by all modules."""


class RoughPathError(Exception):
    pass


class ShapeError(RoughPathError, ValueError):
    """Dimension, truncation level or grid mismatch."""


class DomainError(RoughPathError, ValueError):
    """Argument outside the domain of an operation."""


class ResourceError(RoughPathError, MemoryError):
    """Requested object would be too large to build."""


class RegistryError(RoughPathError, KeyError):
    """Unknown scenario or experiment name."""


class ConfigError(RoughPathError, ValueError):
    """Invalid or unreadable experiment configuration."""


class DivergenceError(RoughPathError, ArithmeticError):
    """A solver produced a non-finite state.

    ``time`` is the first grid time at which the state stopped being finite.
    """

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"solution diverged at t={self.time:.6g}")
