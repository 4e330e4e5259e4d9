"""Exceptions shared across modules."""


class DimensionMismatch(ValueError):
    """Vector/matrix shapes do not line up with the declared dimensions."""


class StepAfterDone(RuntimeError):
    """step() called on a finished episode."""


class NonFiniteGradient(FloatingPointError):
    """Optimizer received a NaN/Inf gradient."""


class NonFiniteLoss(FloatingPointError):
    """Training loss became NaN/Inf; the run aborts with a batch digest."""
