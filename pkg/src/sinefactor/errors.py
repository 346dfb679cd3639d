"""Exception types raised across the package."""


class SineFactorError(Exception):
    """Base class for every computational error raised by this package."""

    code = "error"

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        out.update(getattr(self, "details", {}))
        return out


class EmptySum(SineFactorError):
    pass


class BasisMismatch(SineFactorError):
    pass


class OverflowSignal(SineFactorError):
    """Raised when |Q(z)| does not fit in a float; carries log|Q| and arg Q."""

    def __init__(self, log_magnitude, phase):
        super().__init__(f"|Q(z)| = exp({log_magnitude:.6g}) overflows")
        self.log_magnitude = log_magnitude
        self.phase = phase
        self.details = {"log_magnitude": log_magnitude, "phase": phase}


class BadCutoff(SineFactorError):
    pass


class OverflowAbort(SineFactorError):
    def __init__(self, gamma, magnitude):
        super().__init__(f"|h| = {magnitude:.3g} exceeds the overflow guard at gamma = {gamma!r}")
        self.gamma = gamma
        self.magnitude = magnitude
        g = gamma.to_strings() if hasattr(gamma, "to_strings") else float(gamma)
        self.details = {"gamma": g, "magnitude": magnitude}


class CutoffExceeded(SineFactorError):
    pass


class CutoffMismatch(SineFactorError):
    pass


class BadFactor(SineFactorError):
    pass


class ContourNearZero(SineFactorError):
    def __init__(self, edge, ratio):
        super().__init__(f"|Q| nearly vanishes on contour edge {edge} (min/max = {ratio:.3g})")
        self.edge = edge
        self.ratio = ratio
        self.details = {"edge": [[e.real, e.imag] for e in edge], "ratio": ratio}


class QuadratureFailure(SineFactorError):
    pass


class UnresolvedCluster(SineFactorError):
    def __init__(self, box, count):
        super().__init__(f"cannot isolate {count} zeros in box {box}")
        self.box = box
        self.count = count
        self.details = {"box": list(box), "count": count}


class RequiresCertification(SineFactorError):
    pass


class NotASineProduct(SineFactorError):
    """Peeling failed; ``factors`` holds what was peeled and ``residual`` the rest."""

    def __init__(self, message, factors=(), residual=None):
        super().__init__(message)
        self.factors = list(factors)
        self.residual = residual
        mass = residual.total_mass() if residual is not None else None
        self.details = {"peeled": len(self.factors), "residual_mass": mass}


class InconsistentPrefactor(SineFactorError):
    pass


class InsufficientSamples(SineFactorError):
    pass


class NoProgressionStructure(SineFactorError):
    pass


class NotRealRooted(SineFactorError):
    pass


class ParseError(SineFactorError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
        self.details = {"position": position}
