"""Semantic exception hierarchy shared by all percap modules."""


class PercapError(Exception):
    """Base error for this package."""


class DomainError(PercapError, ValueError):
    """Input outside the documented domain of an operation."""


class DivergedError(PercapError):
    """Free energy requested at or beyond the critical load, where the
    log-volume per dimension is -inf rather than a finite number."""

    def __init__(self, alpha: float, alpha_c: float):
        self.alpha = alpha
        self.alpha_c = alpha_c
        super().__init__(
            f"free energy diverges: alpha={alpha:.12g} >= alpha_c={alpha_c:.12g}"
        )


class ConvergenceError(PercapError):
    """Iterative solver exhausted its budget before meeting its criterion."""

    def __init__(self, message: str, gap: float | None = None):
        self.gap = gap
        super().__init__(message if gap is None else f"{message} (gap={gap:.3e})")


class NumericalFailureError(PercapError):
    """A numerical procedure failed structurally (e.g. no sign change in a
    root bracket); carries diagnostics in the message."""


class StageFailureError(PercapError):
    """A sequential volume stage produced zero acceptances after retries."""

    def __init__(self, stage: int, constraint: int, samples: int):
        self.stage = stage
        self.constraint = constraint
        self.samples = samples
        super().__init__(
            f"stage {stage} (constraint {constraint}): zero acceptances "
            f"in {samples} samples"
        )


class DegenerateWeightError(DomainError):
    """Zero weight requested in the squeezing encoder (infinite squeezing)."""


class MonotonicityError(PercapError):
    """Empirical SAT-probability probes violate monotonicity beyond noise."""
