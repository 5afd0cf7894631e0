"""Exception types raised across the package."""


class KWLabError(Exception):
    """Base class for all package errors."""


class BadParam(KWLabError, ValueError):
    """A family or solver parameter is outside its admissible range."""


class NonUnitSigma(KWLabError, ValueError):
    """The reference section passed to an eigen-split is not of unit length."""


class QuadratureFailure(KWLabError, RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


class GridTooSmall(KWLabError, ValueError):
    """A grid axis has too few nodes for the requested stencil."""


class PhiZeroEverywhere(KWLabError, ValueError):
    """The Higgs combination a1 - i a2 vanishes on the whole grid."""


class ZeroOnCircle(KWLabError, ValueError):
    """The sampled field vanishes somewhere on the winding circle."""


class ShapeMismatch(KWLabError, ValueError):
    """Two scalar grids that must conform have different shapes."""


class NoConvergence(KWLabError, RuntimeError):
    """Relaxation hit its sweep budget; the last iterate is attached."""

    def __init__(self, max_sweeps, last_iterate, update_norm):
        super().__init__(
            f"no convergence after {max_sweeps} sweeps "
            f"(last update max-norm {update_norm:.3e})"
        )
        self.max_sweeps = max_sweeps
        self.last_iterate = last_iterate
        self.update_norm = update_norm


class BadParity(KWLabError, ValueError):
    """k - m is odd or not positive, so p = (k - m)/2 is not a positive integer."""


class MultipleZeros(KWLabError, ValueError):
    """A sampled trajectory changes sign more than once."""


class ConfigError(KWLabError):
    """Base class for configuration problems (CLI exit status 2)."""


class ParseError(ConfigError):
    def __init__(self, line_no, text):
        super().__init__(f"line {line_no}: cannot parse {text!r}")
        self.line_no = line_no


class UnknownKey(ConfigError):
    def __init__(self, name):
        super().__init__(f"unknown key {name!r}")
        self.name = name


class BadValue(ConfigError):
    def __init__(self, key, value, reason=""):
        msg = f"bad value {value!r} for {key!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.key = key
