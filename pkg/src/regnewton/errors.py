"""Exception types shared across the library."""


class DimensionMismatch(ValueError):
    """A vector or operator does not match the metric dimension."""


class NotPositiveDefinite(ValueError):
    """The metric operator failed its positive-definiteness check."""


class NumericalBreakdown(RuntimeError):
    """A shifted linear solve failed although the shift was positive.

    Usually signals an indefinite Hessian coming out of a broken oracle.
    """


class InnerSolveFailure(RuntimeError):
    """The inner proximal solver hit its iteration cap.

    Carries the best iterate found so far in ``best``.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class AdaptiveSearchStall(RuntimeError):
    """The regularization search exceeded its trial cap.

    The partial run is attached in ``trace`` when available.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InitializationFailure(RuntimeError):
    """The preliminary search for the starting regularization constant failed."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


class TraceSchemaError(ValueError):
    """A trace file does not conform to the expected CSV schema."""
