"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or inconsistent input data (parse failures, ragged rows)."""


class NumericalError(ArithmeticError):
    """A factorization or decomposition failed for numerical reasons."""
