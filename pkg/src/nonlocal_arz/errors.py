"""Exception hierarchy shared by all modules."""


class NonlocalARZError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(NonlocalARZError, ValueError):
    pass


class UnsupportedModelError(NonlocalARZError, ValueError):
    pass


class TruncatedSupportError(NonlocalARZError):
    """Density reaches the edge of the computational domain.

    The look-ahead integral runs to +infinity, so mass at the right boundary
    means the domain is too small to represent the downstream traffic.
    """


class InvalidStateError(NonlocalARZError, ValueError):
    pass


class NumericalFailure(NonlocalARZError, FloatingPointError):
    def __init__(self, message, t=None, stage=None):
        super().__init__(message)
        self.t = t
        self.stage = stage


class SingularPointError(NonlocalARZError, ValueError):
    pass


class ODEFailure(NonlocalARZError, RuntimeError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class UndefinedConstantError(NonlocalARZError, ValueError):
    pass
