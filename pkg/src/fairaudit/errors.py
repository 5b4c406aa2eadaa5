"""Exception hierarchy shared across the toolkit."""


class FairauditError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FairauditError):
    """A spec, parameter, or input failed validation; message names the field."""


class EmptySelectionError(FairauditError):
    """A selection step produced no records."""


class DegenerateDatasetError(FairauditError):
    """A (group, label) cell is too small for downstream use."""


class UndefinedMetricError(FairauditError):
    """A metric's conditioning cell or group is empty."""


class NumericalFailureError(FairauditError):
    """The optimizer hit a non-finite loss or diverged."""


class DataFormatError(FairauditError):
    """An input file is malformed; message carries the line number."""


class ExperimentError(FairauditError):
    """Every trial of a dataset cell failed."""
