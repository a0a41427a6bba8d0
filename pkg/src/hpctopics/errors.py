"""Exception and warning types shared across the package."""


class HpcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HpcError):
    """Invalid run configuration (bad sampler settings, malformed config file)."""


# --- topic tree ---------------------------------------------------------


class TreeError(HpcError):
    pass


class DuplicateIdError(TreeError):
    pass


class MultipleRootsError(TreeError):
    pass


class CycleDetectedError(TreeError):
    pass


class DanglingParentError(TreeError):
    pass


class InvalidNodeIdError(TreeError):
    """Node ids must be 0..N-1 with the root at id 0."""


class NonPositiveVarianceError(HpcError):
    pass


# --- corpus -------------------------------------------------------------


class CorpusError(HpcError):
    pass


class MalformedRecordError(CorpusError):
    pass


class UnknownTopicIdError(CorpusError):
    pass


class EmptyLabelSetError(CorpusError):
    pass


class ZeroLengthDocumentError(CorpusError):
    pass


# --- model / numeric ----------------------------------------------------


class AllLabelsInactiveError(HpcError):
    pass


class NonFiniteValueError(HpcError):
    pass


class NonPositiveSampleError(HpcError):
    pass


class NoConvergenceError(HpcError):
    pass


class MassMatrixError(HpcError):
    """Mass matrix could not be made positive definite even with fallbacks."""


# --- estimands / classification -----------------------------------------


class EmptyInputError(HpcError):
    pass


class ZeroDenominatorError(HpcError):
    pass


class ListTooShortError(HpcError):
    pass


class ShapeMismatchError(HpcError):
    pass


class EmptyValidationError(HpcError):
    pass


# --- warnings -----------------------------------------------------------


class DegenerateScaleWarning(UserWarning):
    """A conditional variance draw had a (near) zero scale and was floored."""


class NoConvergenceWarning(UserWarning):
    """An optimizer stopped before meeting its tolerance; best point kept."""


class FallbackMassMatrixWarning(UserWarning):
    """Mass matrix fell back to the prior precision after ridge attempts."""
