"""Exception hierarchy shared by the package."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of an operation."""


class InvalidParameterError(ValueError):
    pass


class OutOfModelError(ValueError):
    """Exponents violate the standing assumption alpha, beta >= 1."""


class PreconditionError(ValueError):
    pass


class IncompatibilityError(ValueError):
    """Initial data that cannot live on the requested grid."""


class NumericError(ArithmeticError):
    pass


class NumericOverflow(NumericError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ContractError(ValueError):
    pass


class NotApplicableError(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnsupportedPresetError(ValueError):
    pass
