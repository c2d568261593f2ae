"""Exception hierarchy shared across the package.

The CLI maps ``InputError`` to exit code 2 and ``NumericalError`` to
exit code 1; everything else is a bug.
"""


class CdcvineError(Exception):
    """Base class for package errors."""


class InputError(CdcvineError):
    """Bad user input: files, formats, invalid configuration or domains."""


class NumericalError(CdcvineError):
    """A numeric procedure failed (non-convergence, degenerate data)."""


class FitError(NumericalError):
    """An estimator failed to converge; carries per-attempt diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
