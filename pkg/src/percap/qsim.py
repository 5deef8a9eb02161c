"""Gaussian-state simulator for the homodyne perceptron circuit.

States are means plus quadrature covariance (never wavefunctions): every
operation in the circuit is Gaussian, so this representation is exact with
O(N^2) memory.  Quadratures are interleaved (q1, p1, q2, p2, ...), hbar = 1
with [q, p] = i, and the symplectic form Omega is block diagonal with
2x2 blocks [[0, 1], [-1, 0]].  A pure input packet of width sigma has
Var(q) = sigma^2 and Var(p) = 1/(4 sigma^2).

The perceptron circuit encodes a pattern x into a product of packets
centered at x_j, rescales quadratures mode by mode (q -> w q, p -> p/w,
with negative w realized by the |w| squeeze composed with the pi quadrature
reflection), then chains controlled additions so the last mode's position
marginal is the homodyne outcome law Normal(w . x, sum_j w_j^2 sigma_j^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateWeightError, DomainError

__all__ = [
    "GaussianState",
    "GateSpec",
    "symplectic_form",
    "symplectic_eigenvalues",
    "gate_matrix",
    "apply_gate",
    "encode",
    "apply_squeeze",
    "apply_cx",
    "run_perceptron_circuit",
    "homodyne_sample",
]


def symplectic_form(n_modes: int) -> np.ndarray:
    """Omega for n modes in interleaved quadrature ordering."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        omega[2 * j, 2 * j + 1] = 1.0
        omega[2 * j + 1, 2 * j] = -1.0
    return omega


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, sorted ascending.

    Computed as the positive imaginary parts of eig(Omega @ cov); the
    uncertainty principle requires every value >= 1/2.
    """
    cov = np.asarray(cov, dtype=np.float64)
    n_modes = cov.shape[0] // 2
    eigs = np.linalg.eigvals(symplectic_form(n_modes) @ cov)
    nu = np.sort(np.abs(eigs.imag))
    return nu[n_modes:]  # pairs +-i*nu; keep one of each


@dataclass(frozen=True)
class GaussianState:
    """Means and covariance of an N-mode Gaussian state (interleaved order)."""

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        d = 2 * self.n_modes
        if self.n_modes < 1 or mean.shape != (d,) or cov.shape != (d, d):
            raise DomainError(
                f"inconsistent shapes for {self.n_modes} modes: "
                f"mean {mean.shape}, cov {cov.shape}"
            )
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise DomainError("state moments must be finite")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise DomainError("covariance must be symmetric within 1e-12")
        if np.min(np.linalg.eigvalsh(cov)) < -1e-12:
            raise DomainError("covariance must be positive semidefinite")
        if np.min(symplectic_eigenvalues(cov)) < 0.5 - 1e-9:
            raise DomainError("covariance violates the uncertainty principle")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def mode_marginal(self, mode: int) -> tuple[float, float]:
        """(mean, variance) of the position quadrature of one mode."""
        if not (0 <= mode < self.n_modes):
            raise DomainError(f"mode {mode} out of range for {self.n_modes} modes")
        i = 2 * mode
        return float(self.mean[i]), float(self.cov[i, i])


@dataclass(frozen=True)
class GateSpec:
    """Wire-level gate description.

    kind 'squeeze' uses ``parameter`` as the squeezing rate r (weight
    w = exp(-2r) > 0); 'phase_flip' is the pi quadrature reflection used to
    realize negative weights; 'cx' adds the control position onto the
    target and needs control != target.
    """

    kind: Literal["squeeze", "phase_flip", "cx"]
    target: int
    control: int | None = None
    parameter: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("squeeze", "phase_flip", "cx"):
            raise DomainError(f"unknown gate kind {self.kind!r}")
        if self.kind == "cx":
            if self.control is None or self.control == self.target:
                raise DomainError("cx requires a control mode distinct from the target")
        elif self.control is not None:
            raise DomainError(f"{self.kind} takes no control mode")


def gate_matrix(spec: GateSpec, n_modes: int) -> np.ndarray:
    """The 2N x 2N symplectic matrix realized by a GateSpec."""
    if not (0 <= spec.target < n_modes):
        raise DomainError(f"target {spec.target} out of range")
    s = np.eye(2 * n_modes)
    qt, pt = 2 * spec.target, 2 * spec.target + 1
    if spec.kind == "squeeze":
        w = math.exp(-2.0 * spec.parameter)
        s[qt, qt] = w
        s[pt, pt] = 1.0 / w
    elif spec.kind == "phase_flip":
        s[qt, qt] = -1.0
        s[pt, pt] = -1.0
    else:  # cx
        if not (0 <= spec.control < n_modes):
            raise DomainError(f"control {spec.control} out of range")
        qc, pc = 2 * spec.control, 2 * spec.control + 1
        s[qt, qc] = 1.0
        s[pc, pt] = -1.0
    return s


def _transform(state: GaussianState, s: np.ndarray) -> GaussianState:
    return GaussianState(
        n_modes=state.n_modes,
        mean=s @ state.mean,
        cov=s @ state.cov @ s.T,
    )


def apply_gate(state: GaussianState, spec: GateSpec) -> GaussianState:
    return _transform(state, gate_matrix(spec, state.n_modes))


def encode(x, sigmas) -> GaussianState:
    """Product state of position packets centered at x with widths sigmas."""
    x = np.asarray(x, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if x.ndim != 1 or sigmas.shape != x.shape:
        raise DomainError("x and sigmas must be 1D arrays of equal length")
    if np.any(sigmas <= 0.0) or not np.all(np.isfinite(sigmas)):
        raise DomainError("packet widths must be positive and finite")
    n = x.size
    mean = np.zeros(2 * n)
    mean[0::2] = x
    diag = np.empty(2 * n)
    diag[0::2] = sigmas**2
    diag[1::2] = 0.25 / sigmas**2
    return GaussianState(n_modes=n, mean=mean, cov=np.diag(diag))


def apply_squeeze(state: GaussianState, mode: int, w: float) -> GaussianState:
    """Quadrature rescaling q -> w q, p -> p/w on one mode.

    Negative w is the |w| squeeze composed with the quadrature reflection,
    which is the same diagonal map; w = 0 would be infinite squeezing and
    is rejected.
    """
    w = float(w)
    if w == 0.0 or not math.isfinite(w):
        raise DegenerateWeightError(f"weight must be nonzero and finite, got {w!r}")
    if not (0 <= mode < state.n_modes):
        raise DomainError(f"mode {mode} out of range")
    s = np.eye(2 * state.n_modes)
    s[2 * mode, 2 * mode] = w
    s[2 * mode + 1, 2 * mode + 1] = 1.0 / w
    return _transform(state, s)


def apply_cx(state: GaussianState, control: int, target: int) -> GaussianState:
    """Controlled addition: q_target -> q_control + q_target, p_control -> p_control - p_target."""
    if control == target:
        raise DomainError("cx requires control != target")
    return apply_gate(state, GateSpec(kind="cx", target=target, control=control))


def run_perceptron_circuit(x, w, sigmas) -> tuple[float, float, GaussianState]:
    """Full circuit: encode, rescale by weights, chain additions.

    Returns the last-mode position marginal (mean, variance) and the final
    state; the marginal must equal (w . x, sum w_j^2 sigma_j^2) up to
    rounding, which is what the homodyne readout measures.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if not (x.shape == w.shape == sigmas.shape) or x.ndim != 1:
        raise DomainError("x, w, sigmas must be 1D arrays of equal length")
    if np.any(w == 0.0):
        raise DegenerateWeightError("all weights must be nonzero")
    state = encode(x, sigmas)
    for j, wj in enumerate(w):
        state = apply_squeeze(state, j, float(wj))
    for j in range(x.size - 1):
        state = apply_cx(state, control=j, target=j + 1)
    mean_out, var_out = state.mode_marginal(x.size - 1)
    return mean_out, var_out, state


def homodyne_sample(state: GaussianState, mode: int, rng: np.random.Generator,
                    shots: int) -> np.ndarray:
    """Independent position-quadrature measurement outcomes for one mode."""
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    mu, var = state.mode_marginal(mode)
    return rng.normal(mu, math.sqrt(var), size=shots)


def ks_statistic(samples: np.ndarray, mean: float, var: float) -> float:
    """Kolmogorov-Smirnov distance of samples from Normal(mean, var)."""
    from scipy.special import ndtr

    if var <= 0.0:
        raise DomainError("variance must be positive")
    s = np.sort(np.asarray(samples, dtype=np.float64))
    n = s.size
    cdf = ndtr((s - mean) / math.sqrt(var))
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
