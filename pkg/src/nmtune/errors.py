"""Exception hierarchy.

Every error carries a ``kind`` used by the service / CLI to map failures onto
exit codes: usage -> 1, data -> 2, numeric -> 3.
"""


class NmtuneError(Exception):
    kind = "data"


class UsageError(NmtuneError):
    kind = "usage"


class DataError(NmtuneError):
    kind = "data"


class ShapeError(DataError):
    pass


class ValidationError(DataError):
    pass


class FormatError(DataError):
    """Bad magic or unsupported version in a binary container."""


class LengthError(DataError):
    """Payload byte length does not match the declared sizes."""


class LabelError(DataError):
    pass


class StratificationError(DataError):
    pass


class NoiseImpossibleError(DataError):
    pass


class InsufficientSamplesError(DataError):
    pass


class EmptyEvalError(DataError):
    pass


class NumericError(NmtuneError):
    kind = "numeric"

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class DegenerateSpectrumError(NumericError):
    pass


class DegenerateGradientError(NumericError):
    pass


class NormalizationError(NumericError):
    """A row (or matrix) that must be normalized has zero norm."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DivergenceError(NumericError):
    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
