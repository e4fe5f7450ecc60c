from featguard.common.rich import RichValueError


class FeatguardError(RichValueError):
    exit_code = 1


class ConfigurationError(FeatguardError):
    """Pipeline, catalog or config file is inconsistent."""
    exit_code = 2


class DimensionMismatchError(FeatguardError):
    """Caller passed vectors of different dimension than the input space."""


class NoForegroundError(FeatguardError):
    """Extractor found no foreground pixel to decide on."""


class EnumerationCapExceeded(FeatguardError):
    """Exhaustive search would examine more pairs than the configured cap."""

    def __init__(self, required: int, cap: int):
        super().__init__("exhaustive search needs {value} pairs but the cap is {key}; use the greedy attack instead",
                         value=required, key=cap)
        self.required = required
        self.cap = cap


class HypothesisError(FeatguardError):
    """A composition theorem was invoked without its hypothesis established."""


class UnknownTupleError(FeatguardError):
    """Candidate vector is all-zero: the feature tuple is not in the catalog."""


class ReportWriteError(FeatguardError):
    exit_code = 2
