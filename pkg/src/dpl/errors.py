"""Exception types raised across the package."""


class DPLError(Exception):
    """Base class for package errors."""


class StepMisaligned(DPLError, ValueError):
    """The step size does not divide a positive delay."""


class NonFiniteState(DPLError, ArithmeticError):
    """A NaN or Inf appeared in the state during integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class EmptyRange(DPLError, ValueError):
    """A parameter range or grid has no extent."""


class NoRealAmplitude(DPLError, ValueError):
    """A phase-locked state would need a negative squared amplitude."""


class NoConvergence(DPLError, RuntimeError):
    """An iterative solver failed to meet its tolerance."""
