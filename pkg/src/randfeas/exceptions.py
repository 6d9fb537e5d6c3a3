"""Exception hierarchy shared by every module."""


class RandFeasError(Exception):
    """Base class for all errors raised by randfeas."""


class DimensionError(RandFeasError, ValueError):
    """Vector or matrix dimensions do not agree."""


class ParameterError(RandFeasError, ValueError):
    """An argument lies outside its admissible range."""


class InconsistentSubgradient(RandFeasError, ArithmeticError):
    """A violated constraint returned a (numerically) zero subgradient.

    For a convex ``g_i`` with ``g_i(z) > 0`` a zero subgradient would make
    ``z`` a global minimizer of ``g_i``, so the constraint set would be empty.
    """


class ZeroInitialSubgradient(RandFeasError, ArithmeticError):
    """DoWS-type methods started with ``p_0 = 0`` at a point whose objective
    subgradient vanishes, which leaves the first stepsize undefined."""


class DivergenceError(RandFeasError, FloatingPointError):
    """A solver produced a non-finite value.

    The partially filled trace is attached so callers can still record it.
    """

    def __init__(self, message, trace=None, iteration=None):
        super().__init__(message)
        self.trace = trace
        self.iteration = iteration


class ConfigError(RandFeasError, ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)


class DatasetError(RandFeasError, ValueError):
    """A dataset file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class AllDivergedError(RandFeasError):
    """Every replica (or every grid cell) of an experiment diverged."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures or [])


class OutputError(RandFeasError, OSError):
    """A result file could not be written or read back."""
