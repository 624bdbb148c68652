"""Exception types shared across the package."""


class EraqraError(Exception):
    """Base class for all package errors."""


class IngestionError(EraqraError):
    """Raised when an input CSV or holiday file cannot be turned into a panel."""


class RangeError(EraqraError):
    """Raised when a requested date range falls outside the available data."""


class HistoryError(EraqraError):
    """Raised when a design matrix needs more lagged history than is available."""


class DegenerateWindowError(EraqraError):
    """Raised when a calibration window has zero price variance."""


class ConvergenceError(EraqraError):
    """Raised when an iterative solver fails to converge.

    The last iterate is attached as ``last_iterate`` so callers can inspect
    or salvage it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InvalidDistributionError(EraqraError):
    """Raised when a curve or distribution approximation violates monotonicity."""


class ConversionError(EraqraError):
    """Raised when the expectile-to-quantile CDF recovery fails."""


class BacktestAbortError(EraqraError):
    """Raised when too many backtest cells fail.

    ``failures`` lists (date, hour, method, message) tuples.
    """

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class IncompleteReportError(EraqraError):
    """Raised when evaluation inputs are missing cells.

    ``missing`` lists the offending (method, hour, level) cells.
    """

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)
