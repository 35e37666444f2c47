"""Exception hierarchy shared by every module of the package."""


class FieldError(ValueError):
    """Base class for all errors raised by affinefield."""


class NotPrime(FieldError):
    pass


class ReducibleModulus(FieldError):
    pass


class DegreeMismatch(FieldError):
    pass


class FieldTooLarge(FieldError):
    pass


class ZeroInverse(FieldError, ZeroDivisionError):
    pass


class FieldMismatch(FieldError):
    pass


class ZeroScale(FieldError):
    """Raised when a multiplicative action is requested with scalar 0."""


class ShapeMismatch(FieldError):
    pass


class GridTooLarge(FieldError):
    pass


class IncompleteFamily(FieldError):
    pass


class InadmissiblePolynomial(FieldError):
    pass


class ErgodicBoundAtProductSpace(FieldError):
    """The two-set (ergodic) bound needs a transitive additive action, i.e. m = 1."""


class DeltaTooLarge(FieldError):
    pass


class ZeroInSet(FieldError):
    pass


class FieldTooSmall(FieldError):
    pass


class SThresholdTooLarge(FieldError):
    pass


class BadRule(FieldError):
    pass


class ConfigParse(FieldError):
    pass
