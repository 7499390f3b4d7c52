"""Exception types shared across the package."""


class DimensionLimitError(ValueError):
    """Requested spin count exceeds the supported dense-matrix range."""


class InvalidPairError(ValueError):
    """Spin pair indices are equal or out of range."""


class UndefinedFidelityError(ValueError):
    """Fidelity requested for a numerically zero state."""


class SchemaError(ValueError):
    """Config or input file violates the documented schema.

    ``keys`` lists the offending key paths.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class NumericalError(RuntimeError):
    """A linear-algebra routine failed; message carries the condition report."""


class FitFailureError(RuntimeError):
    """Decay fit impossible for the supplied data (degenerate or non-decaying)."""


class NonConvergenceError(RuntimeError):
    """Raised by the CLI in --strict mode when an optimizer did not converge."""
