"""Exception types raised by sparseflows."""


class SparseFlowsError(Exception):
    """Base class for all sparseflows errors."""


class SingularGramError(SparseFlowsError):
    """A Gram matrix failed its symmetric positive-definite factorization.

    ``pivot`` is the 1-based index of the leading minor that is not
    positive definite, as reported by the factorization.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ConditioningError(SparseFlowsError):
    """A computed quantity fell outside its numerically trustworthy range."""


class DegenerateBatchError(SparseFlowsError):
    """A batch produced a quadratic form too small to normalize by."""


class AllPrunedError(SparseFlowsError):
    """Every candidate fit in a sweep pruned its weight vector to zero."""


class OptimizationError(SparseFlowsError):
    """An optimizer produced a non-finite loss or iterate.

    ``iterate`` holds a diagnostic snapshot (iteration number, parameters).
    """

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class DictionaryTooLargeError(SparseFlowsError):
    """Exhaustive selection was refused because 2^m would be too large."""


class DataFormatError(SparseFlowsError):
    """An input file could not be parsed; the message locates the defect."""
