"""Exception hierarchy shared across the package."""


class DimensionMismatch(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    """A matrix that must be symmetric positive-definite failed to factorize."""

    def __init__(self, name, detail=""):
        self.name = name
        msg = f"{name} is not positive-definite"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class RegularizationTooSmall(NotPositiveDefinite):
    """Raised inside a Newton step when the current lambda cannot make it well posed.

    Globalization loops catch this base class and treat it as "increase lambda".
    """


class PriorNotPD(RegularizationTooSmall):
    def __init__(self, detail=""):
        super().__init__("P0^-1 + Lambda_0", detail)


class CovarianceNotPD(RegularizationTooSmall):
    def __init__(self, step, stage):
        self.step = step
        self.stage = stage
        super().__init__(f"covariance at step {step}", f"stage: {stage}")


class HessianNotPD(RegularizationTooSmall):
    def __init__(self, lam):
        self.lam = lam
        super().__init__("regularized Hessian", f"lambda={lam:g}")


class UnsupportedPrimitive(TypeError):
    pass


class NonFiniteDerivative(ArithmeticError):
    pass


class IllPosedBearing(NonFiniteDerivative):
    pass


class RegularizationExhausted(RuntimeError):
    """Lambda ladder exceeded its cap without producing a descent direction."""
