"""Exception types shared across the package."""


class MvbError(Exception):
    """Base class for every error this package raises deliberately."""


class DimensionError(MvbError, ValueError):
    """Operands live on different node sets, or a dimension is out of range."""


class DegenerateDistributionError(MvbError, ValueError):
    """Outcome probabilities contain zeros where strict positivity is required."""


class NullEventError(MvbError, ValueError):
    """The conditioning event has probability zero."""


class NotPairwiseRepresentableError(MvbError, ValueError):
    """Natural parameters carry interactions of order three or higher."""


class DivergenceError(MvbError, ArithmeticError):
    """An optimizer hit a non-finite objective it could not recover from."""


class SeparationError(MvbError, ArithmeticError):
    """Coefficient magnitudes grew past the separation bound during fitting."""


class DataFormatError(MvbError, ValueError):
    """An input file violates the expected format."""
