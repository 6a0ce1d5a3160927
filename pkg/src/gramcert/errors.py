"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): malformed or
out-of-domain *inputs* (InputError, exit code 2) and *numeric* failures of an
otherwise well-posed computation (NumericError, exit code 3).
"""


class GramcertError(Exception):
    """Base class for all library errors."""


class InputError(GramcertError):
    """Malformed input: bad shapes, unparsable files, invalid parameters."""


class NumericError(GramcertError):
    """Numeric failure or violated mathematical hypothesis."""


class NonFinite(InputError):
    """Input contains NaN or Inf."""


class ShapeMismatch(InputError):
    """Operand shapes do not conform."""


class EvenKernel(InputError):
    """Kernel side must be odd for centered zero-padding layouts."""


class InputTooSmall(InputError):
    """Spatial size n is smaller than the kernel side."""


class TooLarge(InputError):
    """Instance exceeds the desk-scale guard of the brute-force oracle."""


class TooFewSamples(InputError):
    """Not enough samples for the requested estimator."""


class NonPositiveQ(InputError):
    """Anisotropy weights must be strictly positive."""


class EmptyCounts(InputError):
    """Selection-phase counts sum to zero."""


class EmptyGrid(InputError):
    """Candidate grid of simplex maps / temperatures is empty."""


class LabelOutOfRange(InputError):
    """Class label outside the score vector's range."""


class InvalidParameter(InputError):
    """Parameter outside its documented domain."""


class ZeroMatrix(NumericError):
    """Operand is numerically zero where a nonzero operand is required."""


class DegenerateSpectrum(NumericError):
    """Dominant eigen/singular pair could not be isolated."""


class HypothesisViolated(NumericError):
    """Parameters violate the hypothesis of the governing bound."""


class RootBracketFailure(NumericError):
    """Root finder could not bracket a sign change."""


class DegenerateP(NumericError):
    """Probability argument too close to 0 or 1."""
