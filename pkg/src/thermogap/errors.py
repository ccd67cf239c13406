"""Exception hierarchy shared by all thermogap modules."""


class ThermogapError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(ThermogapError, ValueError):
    """A family parameter lies outside its admissible range."""


class NumericFailure(ThermogapError, ArithmeticError):
    """An iterative numerical routine did not converge."""


class NoConvergence(NumericFailure):
    """Power iteration hit its iteration cap."""


class MissingDerivative(ThermogapError):
    """Derivative data of the requested order is not available."""


class CoverGap(ThermogapError):
    """A family of arcs does not cover the circle."""


class Infeasible(ThermogapError):
    """The constants admit no positive solution."""


class ArcTooLarge(ThermogapError, ValueError):
    """An arc is not contained in a single injectivity domain."""


class NonPositiveInput(ThermogapError, ValueError):
    """A function expected to be strictly positive is not."""


class NotInCone(ThermogapError, ValueError):
    """A function is not a strict member of the cone."""


class InvalidContraction(ThermogapError, ValueError):
    """A contraction constant lies outside (0, 1)."""


class AllBelowFloor(ThermogapError):
    """Fewer than the required number of entries lie above the noise floor."""


class NegativeVariance(NumericFailure):
    """A variance estimate is negative beyond tolerance."""


class ZeroVariance(ThermogapError):
    """The asymptotic variance vanishes so no Gaussian limit can be tested."""


class TooFar(ThermogapError):
    """Points are too far apart for preimages to be paired."""


class ConfigError(ThermogapError):
    """Configuration could not be parsed or validated.

    Parameters
    ----------
    message : str
        Summary line.
    diagnostics : list of str, optional
        One entry per offending field, prefixed with its dotted path.
    """

    def __init__(self, message, diagnostics=None):
        self.diagnostics = list(diagnostics or [])
        full = message
        if self.diagnostics:
            full += "\n" + "\n".join("  " + d for d in self.diagnostics)
        super().__init__(full)
