"""Exception and warning types shared across the package."""


class WallwaveError(Exception):
    """Base class for all errors raised by this package."""


class NoConvergence(WallwaveError):
    """An iterative solve (Newton projection/inversion, root search) failed."""


class DegenerateGradient(WallwaveError):
    """|grad kappa| fell below threshold on or near the traced level set."""


class CurveLeavesDomain(WallwaveError):
    """Level-set tracing could not produce a usable curve inside the domain."""


class OutsideTube(WallwaveError):
    """Requested point lies outside the tubular neighborhood of the curve."""


class OutOfRange(WallwaveError):
    """Arclength query outside the parametrized range of an open curve."""


class InvalidBranch(WallwaveError):
    """Branch label not supported by the requested model (e.g. Dirac (0,+))."""


class ZeroEnergy(WallwaveError):
    """Group velocity requested where the branch energy vanishes."""


class TurningPointAtLaunch(WallwaveError):
    """The launch point itself sits beyond a turning point for some xi."""


class EmptySupport(WallwaveError):
    """Envelope/wavenumber support is empty after intersection with the branch."""


class MultipleRoots(WallwaveError):
    """Stationary-point search found several roots; caller must disambiguate."""

    def __init__(self, roots):
        self.roots = list(roots)
        super().__init__(f"multiple stationary points: {self.roots}")


class DegenerateHessian(WallwaveError):
    """Phase curvature at the stationary point is (numerically) zero."""


class UnderResolvedQuadrature(WallwaveError):
    """Oscillatory quadrature would need more nodes than the configured budget."""


class OutsideValidity(WallwaveError):
    """Requested samples fall outside the turning-point-free validity range."""


class UnstableStep(WallwaveError):
    """Time stepper detected blow-up (norm growth beyond the abort factor)."""


class GridMismatch(WallwaveError):
    """Two fields that must share a grid do not."""


class ConfigError(WallwaveError):
    """Configuration file is malformed; message names the offending field."""


class ResourceLimit(WallwaveError):
    """Requested computation exceeds the configured memory/size budget."""


class ValidityWarning(UserWarning):
    """Semiclassical validity horizon exceeded; accuracy is not claimed."""


class TurningPointWarning(UserWarning):
    """Phase validity range was truncated at a turning point."""
