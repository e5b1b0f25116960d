"""Exception hierarchy shared across calibkit."""


class CalibkitError(ValueError):
    """Base class for all input and domain errors raised by calibkit."""


class DimensionMismatch(CalibkitError):
    pass


class NotOnSimplex(CalibkitError):
    pass


class BadLabel(CalibkitError):
    pass


class ParseError(CalibkitError):
    pass


class BadParameter(CalibkitError):
    pass


class EmptyDataset(CalibkitError):
    pass


class EmptyInput(CalibkitError):
    pass


class TooFewSamples(CalibkitError):
    pass


class DegenerateBandwidth(CalibkitError):
    """The median pairwise distance is zero, so no bandwidth can be derived."""


class UnsupportedKernel(CalibkitError):
    """No closed-form uniform bound is available for this kernel structure."""


class DegenerateVarianceWarning(RuntimeWarning):
    """The pairwise terms of the linear estimator have zero sample variance."""
