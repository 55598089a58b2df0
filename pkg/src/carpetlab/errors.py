"""Exception and warning types shared across carpetlab."""


class CarpetError(Exception):
    """Base class for carpetlab failures."""


class ConfigError(CarpetError, ValueError):
    """Invalid or unknown run configuration."""


class TruncationError(CarpetError):
    """A truncated sum or series did not reach the requested tolerance."""


class QuadratureError(CarpetError):
    """A numerical integral could not be resolved to tolerance."""


class BudgetExceededError(TruncationError):
    """Worldline (j, l) truncation tail exceeds the requested tolerance."""


class PerturbativityWarning(UserWarning):
    """The first relativistic correction is no longer a small correction."""


class WallOverlapWarning(UserWarning):
    """An initial packet has non-negligible amplitude at the box walls."""
