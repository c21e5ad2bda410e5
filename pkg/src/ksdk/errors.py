# src/ksdk/errors.py
from __future__ import annotations


class KsdkError(Exception):
    """Base class for every error raised by the ksdk package."""


class SymmetryError(KsdkError):
    """A field expected to be real has non-Hermitian Fourier coefficients."""


class ShapeError(KsdkError):
    """Resolution or component mismatch between fields."""


class DomainError(KsdkError):
    """An argument lies outside the domain of an operator (e.g. negative time)."""


class NumericalOverflowError(KsdkError):
    """A solver produced non-finite coefficients."""


class PositivityError(KsdkError):
    """A density dropped to or below the positivity floor where a square root is needed."""


class InputError(KsdkError):
    """Initial data or trajectories violate the preconditions of a solver."""


class GridMismatchError(KsdkError):
    """Two time-indexed objects do not live on the same time grid."""


class ConfigError(KsdkError):
    """Configuration could not be resolved; the message names the key path."""


class BlowUpSignal(NumericalOverflowError):
    """A stochastic path left the finite range during a step; the path solver stops it."""
