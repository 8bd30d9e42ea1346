"""Exception hierarchy shared by all submodules."""


class LegendreCMError(Exception):
    """Base class for every error raised by this package."""


# numerics
class ZeroInput(LegendreCMError, ValueError):
    pass


class NonConvergence(LegendreCMError, ArithmeticError):
    pass


class DivergentInput(LegendreCMError, ValueError):
    pass


class PrecisionLoss(LegendreCMError, ArithmeticError):
    """Raised when a quantity cannot be evaluated reliably at the requested precision."""


# modular
class SingularFiber(LegendreCMError, ValueError):
    pass


class ConsistencyError(LegendreCMError, ArithmeticError):
    """Two independent evaluation routes disagree beyond tolerance."""


# quadforms
class InvalidDiscriminant(LegendreCMError, ValueError):
    pass


# heights
class RootIsolationFailure(LegendreCMError, ArithmeticError):
    pass


class UnsupportedDegree(LegendreCMError, ValueError):
    pass


class NotImaginaryQuadratic(LegendreCMError, ValueError):
    pass


class NoRelationFound(LegendreCMError, LookupError):
    pass


# legendre
class NearSingularSlope(LegendreCMError, ArithmeticError):
    pass


class NotOnCurve(LegendreCMError, ValueError):
    pass


class PoleOfSection(LegendreCMError, ZeroDivisionError):
    pass


class BadInput(LegendreCMError, ValueError):
    pass


# lattice
class PrecisionTooLow(LegendreCMError, ValueError):
    pass


# scan
class ConfigError(LegendreCMError, ValueError):
    pass
