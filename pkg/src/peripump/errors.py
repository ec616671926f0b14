"""Exception and warning types.

Every error carries a short ``category`` string; the CLI prints it on the
single error line it emits so callers can branch on it.
"""


class PumpModelError(Exception):
    category = "model"


class InvalidGeometry(PumpModelError, ValueError):
    category = "geometry"


class NonphysicalGeometry(PumpModelError, ValueError):
    category = "geometry"


class InsufficientSamples(PumpModelError, ValueError):
    category = "displacement"


class NonMonotoneData(PumpModelError, ValueError):
    category = "displacement"


class InvalidStep(PumpModelError, ValueError):
    category = "grid"


class GridTooCoarse(PumpModelError, ValueError):
    category = "grid"


class SolverDivergence(PumpModelError, ArithmeticError):
    category = "solver"


class NonFiniteState(PumpModelError, ArithmeticError):
    category = "solver"


class ZeroFlow(PumpModelError, ValueError):
    category = "calibration"


class NoConvergence(PumpModelError):
    """Best inertance sits on an edge of the candidate grid.

    The best candidate and the full score table are still attached so a
    caller can inspect or widen the grid.
    """

    category = "calibration"

    def __init__(self, message, inertance=None, scores=None):
        super().__init__(message)
        self.inertance = inertance
        self.scores = scores


class DegenerateNormalizer(PumpModelError, ValueError):
    category = "analysis"


class ZeroVariance(PumpModelError, ValueError):
    category = "analysis"


class NoDominantPeak(PumpModelError, ValueError):
    category = "analysis"


class ConfigError(PumpModelError, ValueError):
    category = "config"


class MissingTrace(PumpModelError, FileNotFoundError):
    category = "missing-trace"


class OverlapWarning(UserWarning):
    """Inlet and outlet roller pulses overlap in angle (180 - phi - 2*beta < 0)."""
