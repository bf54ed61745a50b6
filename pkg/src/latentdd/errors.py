"""Exception and warning types raised across the package."""


class LatentDDError(Exception):
    """Base class for all package errors."""


class NonPositiveMach(LatentDDError, ValueError):
    pass


class GridTooSmall(LatentDDError, ValueError):
    pass


class InvalidRange(LatentDDError, ValueError):
    pass


class DimMismatch(LatentDDError, ValueError):
    pass


class EmptyTraining(LatentDDError, ValueError):
    pass


class EmptyInput(LatentDDError, ValueError):
    pass


class DisconnectedCloud(LatentDDError, ValueError):
    def __init__(self, sizes):
        self.sizes = list(sizes)
        super().__init__(
            f"edge graph has {len(self.sizes)} large components, sizes {self.sizes}")


class FlatCurve(LatentDDError, ValueError):
    pass


class OutOfRange(LatentDDError, IndexError):
    pass


class NonFiniteLoss(LatentDDError, FloatingPointError):
    pass


class UndersizedDomain(LatentDDError, ValueError):
    pass


class StandardizationError(LatentDDError, ValueError):
    pass


class FormatError(LatentDDError, ValueError):
    pass


class ConfigError(LatentDDError, ValueError):
    pass


class ZeroVarianceColumn(UserWarning):
    """A column had zero variance; it was centered and left unscaled."""


class DegenerateRank(UserWarning):
    """Data rank fell below the requested target dimension."""
