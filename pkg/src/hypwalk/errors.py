"""Exception hierarchy. The CLI maps every HypwalkError to exit code 1."""


class HypwalkError(Exception):
    pass


class UsageError(HypwalkError, ValueError):
    """Bad input: mixed space variants, malformed words or files, invalid parameters."""


class NumericError(HypwalkError, ArithmeticError):
    """Floating point state no longer trustworthy (determinant drift, Im <= 0, overflow)."""


class IndeterminateClassification(NumericError):
    pass


class BudgetExceeded(HypwalkError):
    pass


class CertificateRefuted(HypwalkError, AssertionError):
    """Brute-force verification contradicted a certificate.

    Either an implementation bug or a hyperbolicity constant that is too small.
    """
