"""
errors.py

Exception hierarchy shared by every bidisktools module.
"""


class BidiskError(ValueError):
    pass


class ZeroPolynomialError(BidiskError):
    pass


class ReflectionDegreeError(BidiskError):
    pass


class NotInnerError(BidiskError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FactorMismatchError(BidiskError):
    pass


class ZeroFiberError(BidiskError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class IndexUndefinedError(BidiskError):
    pass


class NonConstantIndexError(BidiskError):
    pass


class NotFredholmError(BidiskError):
    pass


class NodeCollisionError(BidiskError):
    pass


class SingularGramError(BidiskError):
    pass


class CurvatureError(BidiskError):
    pass


class CoalescingPointError(BidiskError):
    pass


class NumericalFailureError(BidiskError):
    pass


class UnivariateFactorError(BidiskError):
    pass


class ConfigError(BidiskError):
    pass


class InputFormatError(BidiskError):
    pass
