"""Exception hierarchy shared by every module."""


class BallexpError(Exception):
    """Base class for all errors raised by the package."""


class ShapeError(BallexpError):
    """Points or nets from incompatible spaces were combined."""


class DomainError(BallexpError):
    """A point lies outside the space a map is defined on."""


class ContractError(BallexpError):
    """A documented precondition of an operation does not hold."""


class UnsupportedSystemError(BallexpError):
    """The operation has no exact method for this kind of system."""


class ResourceError(BallexpError):
    """A configured size cap was exceeded."""

    def __init__(self, cap_name, limit, needed=None):
        self.cap_name = cap_name
        self.limit = limit
        self.needed = needed
        msg = f"cap '{cap_name}' exceeded (limit {limit}"
        if needed is not None:
            msg += f", needed at least {needed}"
        super().__init__(msg + ")")
