"""Exception types shared across the package."""


class PBergmanError(Exception):
    """Base class for all package errors."""


class ParameterError(PBergmanError, ValueError):
    """An argument is outside its documented range or malformed."""


class DomainError(PBergmanError, ValueError):
    """A point lies outside the domain (or on its boundary)."""


class UnsupportedExponentError(ParameterError):
    """The integrability exponent p is outside the supported range."""
