"""Exception hierarchy shared across the package."""


class SkewImputeError(Exception):
    """Base class for all package errors."""


class InsufficientData(SkewImputeError):
    pass


class SingularDesign(SkewImputeError):
    pass


class DegenerateFit(SkewImputeError):
    """Residual variance is zero, so posterior draws would carry no noise."""


class DegenerateSample(SkewImputeError):
    pass


class InvalidData(SkewImputeError):
    pass


class UnreachableBound(SkewImputeError):
    """Tail mass above a truncation bound underflows double precision."""


class InfeasibleTarget(SkewImputeError):
    """No pre-bound normal reproduces the requested post-bound moments."""


class NearSingular(InfeasibleTarget):
    """A root exists but sits so deep in the tail that it is numerically meaningless."""

    def __init__(self, message, z_c=None):
        super().__init__(message)
        self.z_c = z_c


class NonConvergence(SkewImputeError):
    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class MethodFailure(SkewImputeError):
    pass
