from typing import Any, Optional


class JemoError(Exception):
    ...


class DimMismatch(JemoError):
    def __init__(self, message: str, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(message)


class NotHermitian(JemoError):
    ...


class NotSymmetric(JemoError):
    ...


class NotNormal(JemoError):
    ...


class NotCommuting(JemoError):
    ...


class NotNormalized(JemoError):
    ...


class ZeroMatrix(JemoError):
    ...


class UnknownEnsemble(JemoError):
    ...


class EmptyTensor(JemoError):
    ...


class DependentPair(JemoError):
    def __init__(self, message: str, ratio: Optional[complex] = None):
        self.ratio = ratio
        super().__init__(message)


class PreconditionFailed(JemoError):
    ...


class AmbiguousMatch(JemoError):
    ...


class FactorizationError(JemoError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(message)


class LambdaOutOfRange(JemoError):
    ...


class DegenerateModel(JemoError):
    ...


class ConfigError(JemoError):
    def __init__(self, message: str, option: Any = None):
        self.option = option
        super().__init__(message)


class AmplificationMismatch(JemoError):
    def __init__(self, message: str, gap: float):
        self.gap = gap
        super().__init__(message)


class InvalidInput(JemoError):
    def __init__(self, message: str, value_type: Any = None):
        self.value_type = value_type
        super().__init__(message)
