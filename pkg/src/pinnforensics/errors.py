"""Exception types shared across the package."""


class PinnForensicsError(Exception):
    """Base class for all package errors."""


class ShapeMismatchError(PinnForensicsError, ValueError):
    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class NetworkOverflowError(PinnForensicsError, FloatingPointError):
    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class UnsupportedActivationError(PinnForensicsError, ValueError):
    pass


class DegenerateInputError(PinnForensicsError, ValueError):
    pass


class NonFiniteLossError(PinnForensicsError, FloatingPointError):
    pass


class ConfigError(PinnForensicsError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DivergenceError(PinnForensicsError, FloatingPointError):
    """Training produced a non-finite loss.

    ``params`` and ``history`` hold the last finite checkpoint.
    """

    def __init__(self, message, params=None, history=None, step=None):
        super().__init__(message)
        self.params = params
        self.history = history
        self.step = step


class InstabilityError(PinnForensicsError, FloatingPointError):
    pass


class UnderResolvedError(PinnForensicsError, ValueError):
    pass


class EigenConvergenceError(PinnForensicsError, ArithmeticError):
    def __init__(self, message, fingerprint=None):
        super().__init__(message)
        self.fingerprint = fingerprint


class DumpIntegrityError(PinnForensicsError, ValueError):
    def __init__(self, message, check=None):
        super().__init__(message)
        self.check = check


class GridMismatchError(PinnForensicsError, ValueError):
    pass
