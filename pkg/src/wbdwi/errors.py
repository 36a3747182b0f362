"""Exception hierarchy shared across the pipeline."""


class WbdwiError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(WbdwiError):
    """Invalid input data, configuration, or file format (CLI exit code 2)."""


class StageError(WbdwiError):
    """A pipeline stage failed while processing valid inputs (CLI exit code 3)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class NormalizationError(StageError):
    """Inter-scan normalization failed; the inter-station result is kept.

    Attributes
    ----------
    stage1_volume, station_gains
        The inter-station equalized volume and its gains, retrievable even
        though the second normalization stage could not run.
    """

    def __init__(self, message: str, stage1_volume=None, station_gains=None):
        super().__init__("normalize", message)
        self.stage1_volume = stage1_volume
        self.station_gains = station_gains
