"""Precision context shared by every numerical routine in the package.

All high-precision arithmetic in this package runs through mpmath under an
explicit context object so that results are reproducible for a fixed digit
count and evaluation order.  The context separates *reporting* precision
(``decimal_digits``) from *working* precision (reporting plus guard digits):
residual checks of algebraically exact identities need the guard headroom so
that reported residuals reflect identity exactness rather than roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

__all__ = ["PrecisionContext", "ComputationAlarm", "DegenerateStateError"]


class ComputationAlarm(RuntimeError):
    """Raised when an estimated error bound exceeds its contract.

    Carries a machine-readable payload for the CLI's JSON-lines stderr.
    """

    def __init__(self, kind: str, message: str, **data):
        super().__init__(message)
        self.kind = kind
        self.data = data


class DegenerateStateError(ValueError):
    """Raised when a state hits a removable-singularity configuration

    (for example a ratio denominator within tolerance of 0 or 1), where the
    rational closures of the derivative fields are not evaluable.
    """


@dataclass(frozen=True)
class PrecisionContext:
    """Decimal working precision plus derived tolerances.

    decimal_digits
        Reporting precision; at least 16.
    guard_digits
        Extra digits carried internally so that identity residuals at the
        reporting precision are dominated by the identities themselves.
    """

    decimal_digits: int = 60
    guard_digits: int = 15

    def __post_init__(self):
        if self.decimal_digits < 16:
            raise ValueError("decimal_digits must be at least 16")
        if self.guard_digits < 0:
            raise ValueError("guard_digits must be nonnegative")

    @property
    def dps(self) -> int:
        """Working decimal precision (reporting + guard digits)."""
        return self.decimal_digits + self.guard_digits

    @property
    def epsilon(self) -> mp.mpf:
        """Unit roundoff at reporting precision: 10^(2 - decimal_digits)."""
        with mp.workdps(self.dps):
            return mp.mpf(10) ** (2 - self.decimal_digits)

    def working(self):
        """Context manager setting mpmath to the working precision."""
        return mp.workdps(self.dps)

    def mpf(self, value) -> mp.mpf:
        """Convert ``value`` to an mpf at working precision.

        Floats are converted exactly (binary value); strings and integers
        are parsed at working precision.
        """
        with self.working():
            return mp.mpf(value)

    @property
    def degenerate_tol(self) -> mp.mpf:
        """Tolerance below which a denominator counts as degenerate."""
        with self.working():
            return mp.mpf(10) ** (-(self.decimal_digits // 2))


DEFAULT_CONTEXT = PrecisionContext()
