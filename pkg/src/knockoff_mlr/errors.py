"""Exception taxonomy shared across the package."""

from __future__ import annotations


class KnockoffMlrError(Exception):
    """Base class for all package-specific errors."""


class DataError(KnockoffMlrError, ValueError):
    """Malformed or infeasible input data.

    Parameters
    ----------
    message : str
        Human-readable description.
    row, col : int, optional
        Zero-based coordinates of the offending entry, when known.
    """

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        self.row = row
        self.col = col
        if row is not None or col is not None:
            where = ", ".join(
                f"{name}={val}" for name, val in (("row", row), ("col", col)) if val is not None
            )
            message = f"{message} ({where})"
        super().__init__(message)


class FeasibilityError(KnockoffMlrError, ValueError):
    """Requested construction has no feasible solution (e.g. 2*Sigma - S not PSD)."""


class ConvergenceError(KnockoffMlrError, RuntimeError):
    """Iterative routine failed to converge or produced non-finite state."""
