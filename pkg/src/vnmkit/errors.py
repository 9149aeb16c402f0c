"""Exception hierarchy.

Everything raised on bad input derives from :class:`VnmError` (itself a
``ValueError``). Container decoding problems raise :class:`ContainerError`,
which the CLI reports as an I/O failure rather than a validation failure.
"""


class VnmError(ValueError):
    pass


class NonDivisibleRows(VnmError):
    pass


class NonDivisibleCols(VnmError):
    pass


class UnsupportedPattern(VnmError):
    pass


class ShapeMismatch(VnmError):
    pass


class InvalidMask(VnmError):
    pass


class CorruptMetadata(VnmError):
    pass


class NonFiniteValue(VnmError):
    pass


class LengthMismatch(VnmError):
    pass


class NoSamples(VnmError):
    pass


class SingularSubmatrix(VnmError):
    pass


class FisherShapeMismatch(VnmError):
    pass


class InfeasibleNesting(VnmError):
    pass


class InvalidSchedule(VnmError):
    pass


class DimensionMismatch(VnmError):
    pass


class IllegalMetadata(VnmError):
    pass


class ZeroDenominator(VnmError):
    pass


class UnrealizableSparsity(VnmError):
    pass


class ContainerError(VnmError):
    """Malformed or truncated binary container."""
