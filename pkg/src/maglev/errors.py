"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter set violates a documented invariant."""


class DivergenceError(ArithmeticError):
    """Numerical integration left the bounded region of the model."""

    def __init__(self, tau, message=None):
        self.tau = float(tau)
        super().__init__(message or f"state diverged at tau={self.tau:.6g}")


class ChartError(ValueError):
    """Polar slow-flow coordinates are singular (an amplitude is ~0)."""


class ResonantDenominatorError(ValueError):
    """W4 or beta3 equals 1, where the primary-resonance expansion breaks down.

    Use :mod:`maglev.internal` for that regime.
    """


class GridMismatchError(ValueError):
    """The forcing period is not an integer number of integration steps."""


class ConfigError(ValueError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message, line=None, column=None, key=None):
        self.line = line
        self.column = column
        self.key = key
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
