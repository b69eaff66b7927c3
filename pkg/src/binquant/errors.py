"""Exception hierarchy shared by every binquant module."""


class BinQuantError(Exception):
    """Base class for all library errors."""


class DomainError(BinQuantError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateFir(BinQuantError, ValueError):
    """An operation needs an autoregressive part but the model is FIR (p = 0)."""


class UnstableSystem(BinQuantError, ValueError):
    """The companion matrix has spectral radius at or above the allowed bound."""


class NumericalError(BinQuantError, ArithmeticError):
    """A numerical routine failed to converge."""


class StateError(BinQuantError, RuntimeError):
    """An operation was called on an estimator in the wrong state."""


class ConditionViolated(BinQuantError):
    """The sufficient convergence condition does not hold, so no step size is certified."""

    def __init__(self, value: float):
        self.value = value
        super().__init__(
            f"convergence condition left-hand side is {value:.6g} <= 0; "
            "no step size is certified"
        )


class ConfigError(BinQuantError, ValueError):
    """A configuration file is malformed; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
