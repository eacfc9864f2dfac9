"""Exception types shared across the package."""


class InvalidConfigError(ValueError):
    """A configuration value violates its documented constraints."""


class ShapeError(ValueError):
    """An array argument has an incompatible shape or length."""


class NumericFaultError(FloatingPointError):
    """A NaN or infinity appeared mid-computation.

    ``location`` identifies where: a stage name for single-neuron code,
    a (layer, neuron, t) tuple for network code, or a parameter path for
    gradients.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class FitFailureError(RuntimeError):
    """All optimizer starts diverged or produced non-finite objectives."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
