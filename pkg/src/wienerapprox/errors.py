"""Exception hierarchy shared by the package."""


class WienerError(ValueError):
    """Base class for all domain errors raised by wienerapprox."""


class CountOverflow(WienerError):
    """Lattice count no longer fits the fixed-width count type."""


class FamilyError(WienerError):
    """A weight function failed verification against its declared family."""


class DivergentSeries(WienerError):
    """A weighted tail sum does not converge for the given exponent."""


class NonConvergence(WienerError):
    """A tail bound stopped shrinking or the requested tolerance was not reached."""


class ScanCapExceeded(WienerError):
    """A shell scan ran past its cap without a certified answer."""


class RegimeMismatch(WienerError):
    """An order predictor was requested outside its validity range."""


class GuardExceeded(WienerError):
    """A brute-force routine was asked for an instance that is too large."""
