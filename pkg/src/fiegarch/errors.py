"""Exception types shared across the package."""


class FiegarchError(Exception):
    """Base class for all library errors."""


class DomainError(FiegarchError, ValueError):
    """A parameter lies outside its mathematical domain (e.g. |d| >= 0.5)."""


class NonInvertibleError(FiegarchError, ValueError):
    """A lag polynomial has a root on or inside the unit circle."""


class SingularSeriesError(FiegarchError, ZeroDivisionError):
    """A power series with zero constant term cannot be inverted."""


class EstimationError(FiegarchError, RuntimeError):
    """Model fitting failed or was handed unusable data."""


class PanelError(FiegarchError, ValueError):
    """Malformed data panel: ragged rows, bad cells or invalid prices."""


class DegeneratePortfolioError(FiegarchError, ValueError):
    """The portfolio direction carries no variance (a' Sigma a = 0)."""


class HorizonScalingWarning(UserWarning):
    """sqrt(h) scaling of a quantile is only exact for a zero-mean law."""


class ConvergenceWarning(UserWarning):
    """An estimate is being used although the optimizer did not converge."""
