"""Exception types shared across the library."""


class BayesBenchError(Exception):
    """Base class for all library-specific errors."""


class ExpressionSyntaxError(BayesBenchError):
    """Malformed expression or config document (bad token, unbalanced parens)."""


class UnknownIdentifierError(BayesBenchError):
    """Expression references a name that is not in the component registry."""


class ArityError(BayesBenchError):
    """Combinator applied to the wrong number of children."""


class UnknownKeyError(BayesBenchError):
    """Config document contains a key that is not a parameter field."""


class DuplicateKeyError(BayesBenchError):
    """Config document defines the same key twice."""


class TypeMismatchError(BayesBenchError):
    """Config value has the wrong type for its field."""


class RangeError(BayesBenchError):
    """Config value is outside its documented range."""


class DimensionMismatchError(BayesBenchError):
    """Vector/matrix arguments have incompatible shapes."""


class LengthMismatchError(BayesBenchError):
    """Sequence arguments that must agree in length do not."""


class NotPositiveDefiniteError(BayesBenchError):
    """Cholesky factorization hit a nonpositive pivot.

    ``pivot`` is the zero-based index of the failing pivot.
    """

    def __init__(self, message: str, pivot: int = -1):
        super().__init__(message)
        self.pivot = pivot


class DegenerateBasisError(BayesBenchError):
    """Mean-basis design matrix is rank deficient for the requested model."""


class InitDesignInfeasibleError(BayesBenchError):
    """Could not generate enough reachable initial-design points."""


class UnsupportedDimensionError(BayesBenchError):
    """Requested dimension exceeds what the generator supports."""


class OutOfOrderError(BayesBenchError):
    """Ask/tell protocol violation (tell without a pending proposal, etc.)."""


class ExperimentError(BayesBenchError):
    """A benchmark run failed; carries the failing run index."""

    def __init__(self, message: str, run_index: int = -1):
        super().__init__(message)
        self.run_index = run_index
