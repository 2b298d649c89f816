"""
Exception hierarchy for the generator engine.

Library code raises these; only the command-line layer catches them and
turns them into exit codes.
"""

from __future__ import annotations

from typing import Optional


class DwigError(Exception):
    """Base class for every engine failure."""


class ConfigError(DwigError):
    """Invalid, missing or malformed configuration or input data."""


class SingularInductanceMatrix(DwigError):
    """The 6x6 flux/current map cannot be inverted."""


class SingularSystem(DwigError):
    """The steady-state linear system (or trim search) has no usable solution."""


class DivergedState(DwigError):
    """A simulated quantity left the finite range."""

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        if time is not None:
            message = f"{message} (t = {time:.6g} s)"
        super().__init__(message)


class DimensionMismatch(DwigError):
    """Vector or window lengths do not match the model order."""


class NonFiniteUpdate(DwigError):
    """An estimator update produced NaN or infinite values."""


class UnrealizableLaw(DwigError):
    """The control law denominator b0 + rho is numerically zero."""
