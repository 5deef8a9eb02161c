"""Analytic capacity theory for margin perceptrons on the sphere.

Classical side: the critical load alpha_c(kappa) above which a random
dichotomy of p = alpha*N patterns stops being realizable with stability
margin kappa,

    1 / alpha_c(kappa) = E[(t + kappa)^2 ; t > -kappa]
                       = (1 + kappa^2) Phi(kappa) + kappa phi(kappa).

Quantum side: a homodyne-readout perceptron with encoding width sigma and
per-pattern error budget epsilon has the same theory at the effective
stability

    kappa_tilde = kappa + sigma * Phi^{-1}(1 - epsilon),

so its capacity is alpha_c(kappa_tilde).

Below capacity the log relative volume of feasible weights per dimension
converges to the replica-symmetric free energy

    F(alpha, kappa) = min_q { alpha * E_t ln[1 - Phi((t sqrt(q) + kappa)
                      / sqrt(1-q))] + q/(2(1-q)) + ln(1-q)/2 },

whose stationarity condition in the overlap q is solved by
``saddle_overlap``; ``capacity_from_saddle`` evaluates the q -> 1 limit of
that condition, which must reproduce alpha_c (the package's internal
consistency check between the two derivations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DivergedError, DomainError, NumericalFailureError
from .specfun import (
    QuadratureRule,
    gauss_integral,
    gauss_integral_above,
    inverse_mills,
    log_std_normal_sf,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)

__all__ = [
    "TheoryParams",
    "SaddlePoint",
    "classical_capacity",
    "effective_stability",
    "quantum_capacity",
    "free_energy",
    "saddle_overlap",
    "capacity_from_saddle",
    "rs_bracket",
    "saddle_residual",
]

#: free_energy refuses loads within this relative distance of capacity
_DIVERGENCE_GUARD = 1e-6

#: overlap search domain is clipped away from the q -> 1 singularity
_Q_CLIP = 1e-6


@dataclass(frozen=True)
class TheoryParams:
    """Stability threshold kappa, error budget epsilon, encoding width sigma.

    epsilon is an open-interval probability; sigma is in the dimensionless
    quadrature units of the homodyne readout.  The derived effective
    stability is exposed as ``kappa_tilde``.
    """

    kappa: float
    epsilon: float
    sigma: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.kappa) or self.kappa < 0.0:
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        if not (0.0 < self.epsilon < 1.0):
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not math.isfinite(self.sigma) or self.sigma < 0.0:
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma!r}")

    @property
    def kappa_tilde(self) -> float:
        return effective_stability(self)


@dataclass(frozen=True)
class SaddlePoint:
    """Replica-symmetric saddle: overlap q, free energy, conjugate coefficients.

    conj_F and conj_E are the real coefficients of the purely imaginary
    conjugate order parameters at the saddle; they are functions of q only:
    conj_F = -q/(1-q)^2 and conj_E = -(1-2q)/(1-q)^2.
    """

    q: float
    free_energy: float
    conj_F: float = field(init=False)
    conj_E: float = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.q < 1.0):
            raise DomainError(f"overlap q must lie in [0, 1), got {self.q!r}")
        if self.free_energy > 1e-12:
            raise DomainError(
                f"free energy must be <= 0, got {self.free_energy!r}")
        om = 1.0 - self.q
        object.__setattr__(self, "conj_F", -self.q / om**2)
        object.__setattr__(self, "conj_E", -(1.0 - 2.0 * self.q) / om**2)


def _capacity_closed_form(kappa: float) -> float:
    return 1.0 / ((1.0 + kappa * kappa) * std_normal_cdf(kappa)
                  + kappa * float(std_normal_pdf(kappa)))


def _capacity_quadrature(kappa: float) -> float:
    integral = gauss_integral_above(lambda t: (t + kappa) ** 2, -kappa)
    return 1.0 / integral


def classical_capacity(kappa: float) -> float:
    """Critical load alpha_c(kappa) for the classical margin perceptron.

    Evaluates both the split-quadrature integral and the closed form and
    requires them to agree to 1e-8 before returning the closed form.
    """
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa < 0.0:
        raise DomainError(f"kappa must be finite and >= 0, got {kappa!r}")
    closed = _capacity_closed_form(kappa)
    quad = _capacity_quadrature(kappa)
    if abs(closed - quad) > 1e-8:
        raise NumericalFailureError(
            f"capacity routes disagree at kappa={kappa}: "
            f"closed={closed!r}, quadrature={quad!r}"
        )
    return closed


def effective_stability(params: TheoryParams) -> float:
    """kappa_tilde = kappa + sigma * Phi^{-1}(1 - epsilon)."""
    if params.sigma == 0.0:
        return params.kappa
    return params.kappa + params.sigma * std_normal_quantile(1.0 - params.epsilon)


def quantum_capacity(params: TheoryParams) -> float:
    """Capacity of the homodyne perceptron: alpha_c at the effective stability.

    Only defined for epsilon <= 1/2 (the error budget must not exceed a
    coin flip, which also keeps kappa_tilde >= 0).
    """
    if params.epsilon > 0.5:
        raise DomainError(
            f"quantum capacity requires epsilon <= 1/2, got {params.epsilon!r}"
        )
    return classical_capacity(effective_stability(params))


def rs_bracket(q: float, alpha: float, kappa_eff: float,
               rule: QuadratureRule | None = None) -> float:
    """The minimized free-energy bracket at overlap q.

    ln(1 - Phi) is evaluated through the log-complementary CDF so the
    integrand survives q close to 1, where the argument is huge.
    """
    if not (0.0 <= q < 1.0):
        raise DomainError(f"q must lie in [0, 1), got {q!r}")
    if q == 0.0:
        entropic = 0.0
        energetic = float(log_std_normal_sf(kappa_eff))
        return alpha * energetic + entropic
    om = 1.0 - q
    sq = math.sqrt(q)
    rsq = math.sqrt(om)

    def integrand(t: np.ndarray) -> np.ndarray:
        return log_std_normal_sf((t * sq + kappa_eff) / rsq)

    return (alpha * gauss_integral(integrand, rule)
            + q / (2.0 * om) + 0.5 * math.log(om))


def saddle_residual(q: float, alpha: float, kappa_eff: float,
                    rule: QuadratureRule | None = None) -> float:
    """Stationarity residual of the bracket at overlap q (zero at the saddle)."""
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    om = 1.0 - q
    sq = math.sqrt(q)
    rsq = math.sqrt(om)
    mills = np.vectorize(inverse_mills)

    def integrand(t: np.ndarray) -> np.ndarray:
        return mills((kappa_eff + t * sq) / rsq) * (t + kappa_eff * sq)

    integral = gauss_integral(integrand, rule) / (2.0 * sq * om * rsq)
    return alpha * integral - q / (2.0 * om * om)


def saddle_overlap(alpha: float, kappa_eff: float) -> float:
    """Root q of the stationarity condition, bracketed inside (0, 1-1e-9)."""
    alpha_c = classical_capacity(kappa_eff) if kappa_eff >= 0 else _capacity_closed_form(kappa_eff)
    if not (0.0 < alpha < alpha_c):
        raise DomainError(
            f"alpha must lie in (0, alpha_c={alpha_c:.9g}), got {alpha!r}"
        )
    lo, hi = 1e-10, 1.0 - 1e-9
    r_lo = saddle_residual(lo, alpha, kappa_eff)
    r_hi = saddle_residual(hi, alpha, kappa_eff)
    if r_lo * r_hi > 0.0:
        raise NumericalFailureError(
            "no sign change for the saddle residual: "
            f"r({lo})={r_lo!r}, r({hi})={r_hi!r} at alpha={alpha}, "
            f"kappa_eff={kappa_eff}"
        )
    q = brentq(saddle_residual, lo, hi, args=(alpha, kappa_eff), xtol=1e-14)
    q = _newton_polish(q, alpha, kappa_eff, steps=2)
    resid = saddle_residual(q, alpha, kappa_eff)
    scale = max(1.0, q / (2.0 * (1.0 - q) ** 2))
    if abs(resid) > 1e-10 * scale:
        raise NumericalFailureError(
            f"saddle residual {resid!r} above tolerance at q={q!r}, "
            f"alpha={alpha}, kappa_eff={kappa_eff}"
        )
    return q


def _newton_polish(q: float, alpha: float, kappa_eff: float, steps: int = 3) -> float:
    h = 1e-7
    for _ in range(steps):
        if not (h < q < 1.0 - 1e-9 - h):
            break
        r = saddle_residual(q, alpha, kappa_eff)
        dr = (saddle_residual(q + h, alpha, kappa_eff)
              - saddle_residual(q - h, alpha, kappa_eff)) / (2.0 * h)
        if dr == 0.0:
            break
        step = r / dr
        q_new = q - step
        if not (0.0 < q_new < 1.0 - 1e-9):
            break
        q = q_new
    return q


def free_energy(alpha: float, kappa_eff: float) -> SaddlePoint:
    """Minimize the free-energy bracket over the overlap q.

    Golden-section search on the clipped domain [0, 1-1e-6] followed by
    Newton refinement of the stationarity residual; raises DivergedError
    at or within a relative 1e-6 of capacity, where the limit is -inf.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise DomainError(f"alpha must be positive and finite, got {alpha!r}")
    alpha_c = classical_capacity(kappa_eff) if kappa_eff >= 0 else _capacity_closed_form(kappa_eff)
    if alpha >= alpha_c * (1.0 - _DIVERGENCE_GUARD):
        raise DivergedError(alpha, alpha_c)

    lo, hi = 0.0, 1.0 - _Q_CLIP
    q = _golden_section(lambda q: rs_bracket(q, alpha, kappa_eff), lo, hi)
    if q > hi - 1e-9:
        raise DivergedError(alpha, alpha_c)
    if q > 1e-8:
        q = _newton_polish(q, alpha, kappa_eff, steps=3)
    return SaddlePoint(q=q, free_energy=rs_bracket(q, alpha, kappa_eff))


def _golden_section(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def capacity_from_saddle(kappa_eff: float) -> float:
    """Capacity from the q -> 1 limit of the stationarity condition.

    The limit collapses the saddle integral onto the truncated quadratic
    E[(t + kappa_eff)^2 ; t > -kappa_eff]; its reciprocal must match
    ``classical_capacity`` to 1e-8, which is asserted for kappa_eff >= 0.
    """
    kappa_eff = float(kappa_eff)
    if not math.isfinite(kappa_eff):
        raise DomainError(f"kappa_eff must be finite, got {kappa_eff!r}")
    value = _capacity_quadrature(kappa_eff)
    if kappa_eff >= 0.0:
        closed = _capacity_closed_form(kappa_eff)
        if abs(value - closed) > 1e-8:
            raise NumericalFailureError(
                f"limit-formula capacity {value!r} disagrees with closed form "
                f"{closed!r} at kappa_eff={kappa_eff}"
            )
    return value
