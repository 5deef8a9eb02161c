"""Perceptron instances: patterns, stabilities, feasibility, homodyne readout.

The disorder instance is a PatternSet of p labeled N-dimensional patterns.
For a weight direction u = w/||w|| the pattern stabilities are the signed
margins

    Delta_mu = xi_mu (w . x_mu) / ||w||,

and an instance is feasible at threshold kappa when every Delta_mu clears
kappa (ties within 1e-12 count as satisfied).  The homodyne perceptron
reads sgn through a Gaussian measurement of width sigma*||w||, so a pattern
is classified correctly with probability Phi((Delta - kappa)/sigma); the
constraint "correct with probability >= 1 - epsilon" is identical to the
classical margin test at the effective stability kappa_tilde, and
``quantum_feasible`` exploits that identity bit for bit.

``max_stability`` finds the maximal margin over the sphere by dual
coordinate ascent on the hard-margin program; non-separable instances
(where the program is infeasible) get a local max-min search whose value is
flagged approximate.  ``empirical_capacity`` locates the load alpha = p/N
where the feasibility probability crosses 1/2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import least_squares, linprog

from . import _kernels
from .capacity import TheoryParams, effective_stability
from .errors import ConvergenceError, DomainError, MonotonicityError
from .rng import stream, substream_seed
from .specfun import std_normal_cdf

__all__ = [
    "PatternSet",
    "WeightVector",
    "StabilityVector",
    "ReliabilityVector",
    "MaxStabilityResult",
    "EmpiricalProbe",
    "EmpiricalCapacityResult",
    "TIE_TOL",
    "CORRECT",
    "INCORRECT",
    "ABSTAIN",
    "generate_patterns",
    "xor_patterns",
    "stabilities",
    "classify_classical",
    "max_stability",
    "is_satisfiable",
    "reliability",
    "reliabilities",
    "classify_quantum",
    "quantum_outcome_counts",
    "quantum_feasible",
    "empirical_capacity",
]

#: absolute tie tolerance on Delta - threshold; ties resolve as satisfied
TIE_TOL = 1e-12

CORRECT = "correct"
INCORRECT = "incorrect"
ABSTAIN = "abstain"


@dataclass(frozen=True)
class PatternSet:
    """p labeled N-dimensional patterns: the random disorder instance."""

    n_features: int
    n_patterns: int
    patterns: np.ndarray
    labels: np.ndarray
    distribution_tag: Literal["binary", "gaussian"]
    seed: int

    def __post_init__(self) -> None:
        patterns = np.ascontiguousarray(self.patterns, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if patterns.shape != (self.n_patterns, self.n_features):
            raise DomainError(
                f"patterns shape {patterns.shape} != ({self.n_patterns}, {self.n_features})"
            )
        if labels.shape != (self.n_patterns,):
            raise DomainError(f"labels shape {labels.shape} != ({self.n_patterns},)")
        if not np.all(np.abs(labels) == 1.0):
            raise DomainError("labels must be +-1")
        if self.distribution_tag == "binary":
            if not np.all(np.abs(patterns) == 1.0):
                raise DomainError("binary patterns must have +-1 entries")
        elif self.distribution_tag != "gaussian":
            raise DomainError(f"unknown distribution tag {self.distribution_tag!r}")
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "labels", labels)

    def signed_patterns(self) -> np.ndarray:
        """Rows xi_mu * x_mu; feasibility means all rows' dot with u >= kappa."""
        return np.ascontiguousarray(self.labels[:, None] * self.patterns)


@dataclass(frozen=True)
class WeightVector:
    """Weights on the sphere ||w||^2 = N (normalized on construction)."""

    w: np.ndarray
    n: int

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        if w.shape != (self.n,):
            raise DomainError(f"weight shape {w.shape} != ({self.n},)")
        norm = float(np.linalg.norm(w))
        if norm == 0.0 or not np.isfinite(norm):
            raise DomainError("weight vector must be nonzero and finite")
        object.__setattr__(self, "w", w * (math.sqrt(self.n) / norm))


@dataclass(frozen=True)
class StabilityVector:
    deltas: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", np.asarray(self.deltas, dtype=np.float64))


@dataclass(frozen=True)
class ReliabilityVector:
    r: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=np.float64)
        if np.any(r < 0.0) or np.any(r > 1.0):
            raise DomainError("reliabilities must lie in [0, 1]")
        object.__setattr__(self, "r", r)


def generate_patterns(n: int, p: int, dist: Literal["binary", "gaussian"],
                      seed: int) -> PatternSet:
    """Fresh disorder instance, deterministic in (n, p, dist, seed)."""
    if n < 1 or p < 1:
        raise DomainError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    rng = stream(seed)
    if dist == "binary":
        patterns = rng.integers(0, 2, size=(p, n)).astype(np.float64) * 2.0 - 1.0
    elif dist == "gaussian":
        patterns = rng.standard_normal((p, n))
    else:
        raise DomainError(f"unknown distribution {dist!r}")
    labels = rng.integers(0, 2, size=p).astype(np.float64) * 2.0 - 1.0
    return PatternSet(n_features=n, n_patterns=p, patterns=patterns,
                      labels=labels, distribution_tag=dist, seed=int(seed))


def xor_patterns() -> PatternSet:
    """The four corners of {-1,1}^2 labeled by parity: not linearly separable."""
    corners = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
    labels = np.array([-1.0, 1.0, 1.0, -1.0])
    return PatternSet(n_features=2, n_patterns=4, patterns=corners,
                      labels=labels, distribution_tag="binary", seed=0)


def _as_weights(w) -> np.ndarray:
    if isinstance(w, WeightVector):
        return w.w
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError("weights must be a 1D vector")
    return arr


def stabilities(w, ps: PatternSet) -> StabilityVector:
    """Signed margins Delta_mu = xi_mu (w . x_mu)/||w|| (scale invariant)."""
    wv = _as_weights(w)
    if wv.size != ps.n_features:
        raise DomainError(f"weight length {wv.size} != n_features {ps.n_features}")
    norm = float(np.linalg.norm(wv))
    if norm == 0.0:
        raise DomainError("stabilities undefined for the zero weight vector")
    return StabilityVector(deltas=ps.labels * (ps.patterns @ wv) / norm)


def classify_classical(w, ps: PatternSet) -> np.ndarray:
    """sgn(w . x_mu) with sgn(0) = +1."""
    wv = _as_weights(w)
    scores = ps.patterns @ wv
    return np.where(scores >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# maximal-stability solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxStabilityResult:
    """Sphere weights maximizing the minimal margin, and that margin.

    ``approximate`` marks non-separable instances, where the reported
    kappa_max is the value of a local max-min search rather than a
    certified optimum.  ``gap`` is the final bound gap of the dual solver
    (zero-ish when converged, meaningless on the approximate path).
    """

    w: WeightVector
    kappa_max: float
    separable: bool
    approximate: bool
    gap: float
    epochs: int


def _lp_separable(Z: np.ndarray) -> bool:
    """Sign of the maximal margin via a bounded LP.

    Maximizes t subject to Z u >= t and u in the unit box; the box keeps
    the LP feasible and bounded (u = 0, t = 0 always works), and the
    optimum is positive exactly when a separating direction exists.
    """
    p, n = Z.shape
    c = np.zeros(n + 1)
    c[n] = -1.0
    a_ub = np.hstack([-Z, np.ones((p, 1))])
    res = linprog(
        c=c,
        A_ub=a_ub,
        b_ub=np.zeros(p),
        bounds=[(-1.0, 1.0)] * n + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        raise ConvergenceError(
            f"margin-sign LP failed with status {res.status}: {res.message}"
        )
    return float(res.x[n]) > 1e-9


def _maxmin_local(Z: np.ndarray, seed: int, restarts: int = 20,
                  iters: int = 400) -> tuple[np.ndarray, float]:
    """Local search for argmax_u min_mu Z u on the unit sphere.

    Projected subgradient with decaying steps, then an equal-margin polish:
    the active rows A admit a stationary direction +-w/||w|| with
    Z_A w = 1 (least squares) or, failing that, the near-null right
    singular vector of Z_A.
    """
    p, n = Z.shape
    rng = stream(seed, 0x5AD)
    row_norms = np.linalg.norm(Z, axis=1)
    scale = float(np.mean(row_norms)) or 1.0
    best_u = None
    best_t = -np.inf
    for _ in range(restarts):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        for k in range(iters):
            margins = Z @ u
            i = int(np.argmin(margins))
            eta = 0.3 / math.sqrt(k + 1.0)
            u = u + eta * Z[i] / max(row_norms[i], 1e-300)
            u /= np.linalg.norm(u)
        u, t = _equal_margin_polish(Z, u, scale)
        if t > best_t:
            best_t, best_u = t, u
    return best_u, best_t


def _equal_margin_polish(Z: np.ndarray, u: np.ndarray, scale: float,
                         rounds: int = 8) -> tuple[np.ndarray, float]:
    t = float(np.min(Z @ u))
    for _ in range(rounds):
        margins = Z @ u
        m = float(np.min(margins))
        active = margins <= m + max(1e-3 * scale, 10.0 * abs(m) * 1e-6)
        za = Z[active]
        candidates = []
        w, _, _, sv = np.linalg.lstsq(za, np.ones(int(active.sum())), rcond=None)
        norm_w = float(np.linalg.norm(w))
        if norm_w > 1e-12 and np.allclose(za @ w, 1.0, atol=1e-8):
            candidates.append(w / norm_w)
            candidates.append(-w / norm_w)
        _, _, vt = np.linalg.svd(za, full_matrices=True)
        null_dir = vt[-1]
        candidates.append(null_dir)
        candidates.append(-null_dir)
        improved = False
        for c in candidates:
            tc = float(np.min(Z @ c))
            if tc > t + 1e-15:
                u, t = c, tc
                improved = True
        if not improved:
            break
    return u, t


def max_stability(ps: PatternSet, max_epochs: int = 100_000,
                  gap_tol: float = 1e-8) -> MaxStabilityResult:
    """Maximize the minimal stability over the sphere ||w||^2 = N.

    Separable instances: dual coordinate ascent until the bound gap is
    below gap_tol (ConvergenceError carrying the gap if the budget runs
    out first).  Non-separable instances (certified by an exact LP
    feasibility check): local max-min search, flagged approximate.
    """
    Z = ps.signed_patterns()
    status, lo, hi, v_best, epochs = _kernels.dcd_margin_kernel(
        Z, max_epochs, 16, gap_tol, 0.0, False
    )
    if status == _kernels.DCD_CONVERGED:
        u = v_best / np.linalg.norm(v_best)
        kappa = float(np.min(Z @ u))
        return MaxStabilityResult(
            w=WeightVector(w=u, n=ps.n_features), kappa_max=kappa,
            separable=kappa > 0.0, approximate=False, gap=float(hi - lo),
            epochs=int(epochs),
        )
    # budget exhausted: decide which regime we are in exactly
    if _lp_separable(Z):
        raise ConvergenceError(
            f"margin solver exhausted {max_epochs} epochs on a separable instance",
            gap=float(hi - lo),
        )
    u, kappa = _maxmin_local(Z, seed=ps.seed)
    return MaxStabilityResult(
        w=WeightVector(w=u, n=ps.n_features), kappa_max=float(kappa),
        separable=False, approximate=True, gap=float(hi - lo), epochs=int(epochs),
    )


def _margin_decision(Z: np.ndarray, kappa: float, tol: float, seed: int,
                     max_epochs: int = 40_000) -> bool:
    """True iff kappa_max(Z) >= kappa - tol, resolved as cheaply as possible."""
    decide = kappa - tol
    if decide <= 0.0:
        # cheap pass: a short ascent burst often exhibits a separating
        # direction outright (a sound lower bound on kappa_max)
        status, lo, _, _, _ = _kernels.dcd_margin_kernel(Z, 200, 8, 1e-10, decide, True)
        if status in (_kernels.DCD_SAT, _kernels.DCD_CONVERGED) and lo >= decide:
            return True
        if _lp_separable(Z):
            return True
        if decide == 0.0:
            return False  # kappa_max <= 0 and generically < 0
        _, t = _maxmin_local(Z, seed=seed, restarts=8, iters=200)
        return t >= decide
    status, lo, hi, _, _ = _kernels.dcd_margin_kernel(
        Z, max_epochs, 16, 1e-10, decide, True
    )
    if status == _kernels.DCD_SAT:
        return True
    if status == _kernels.DCD_UNSAT:
        return False
    if status == _kernels.DCD_CONVERGED:
        return lo >= decide
    # budget: a non-separable instance certainly fails a positive threshold
    if not _lp_separable(Z):
        return False
    raise ConvergenceError(
        f"margin decision unresolved after {max_epochs} epochs "
        f"(threshold {kappa}, bounds [{lo}, {hi}])",
        gap=float(hi - lo),
    )


def is_satisfiable(ps: PatternSet, kappa: float, tol: float) -> bool:
    """True iff the maximal margin clears kappa - tol."""
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if kappa < 0.0:
        raise DomainError(f"kappa must be >= 0, got {kappa!r}")
    return _margin_decision(ps.signed_patterns(), kappa, tol, seed=ps.seed)


# ---------------------------------------------------------------------------
# homodyne readout
# ---------------------------------------------------------------------------

def reliability(delta: float, kappa: float, sigma: float) -> float:
    """Probability Phi((delta - kappa)/sigma) of correct classification."""
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    return std_normal_cdf((delta - kappa) / sigma)


def reliabilities(w, ps: PatternSet, params: TheoryParams) -> ReliabilityVector:
    """Per-pattern correct-classification probabilities for one instance."""
    deltas = stabilities(w, ps).deltas
    return ReliabilityVector(r=np.array([
        reliability(float(d), params.kappa, params.sigma) for d in deltas
    ]))


def classify_quantum(w, x, xi: float, kappa: float, sigma: float,
                     rng: np.random.Generator) -> str:
    """One homodyne-readout classification of a single pattern.

    Samples the measurement outcome s ~ Normal(w.x, ||w||^2 sigma^2) and
    assigns class +1 above kappa*||w||, -1 below -kappa*||w||, abstains in
    between; 'correct' means the assigned class equals xi.
    """
    outcome = quantum_outcome_counts(w, x, xi, kappa, sigma, rng, shots=1)
    for name in (CORRECT, INCORRECT, ABSTAIN):
        if outcome[name] == 1:
            return name
    raise AssertionError("unreachable")


def quantum_outcome_counts(w, x, xi: float, kappa: float, sigma: float,
                           rng: np.random.Generator, shots: int) -> dict[str, int]:
    """Outcome tally over repeated homodyne classifications of one pattern."""
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    if xi not in (-1.0, 1.0, -1, 1):
        raise DomainError(f"xi must be +-1, got {xi!r}")
    wv = _as_weights(w)
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(wv))
    if norm == 0.0:
        raise DomainError("zero weight vector")
    s = rng.normal(float(wv @ x), norm * sigma, size=shots)
    gate = kappa * norm
    assigned = np.where(s > gate, 1.0, np.where(s < -gate, -1.0, 0.0))
    n_abstain = int(np.sum(assigned == 0.0))
    n_correct = int(np.sum(assigned == float(xi)))
    return {
        CORRECT: n_correct,
        INCORRECT: shots - n_correct - n_abstain,
        ABSTAIN: n_abstain,
    }


def quantum_feasible(ps: PatternSet, w, params: TheoryParams) -> bool:
    """True iff every pattern is correct with probability >= 1 - epsilon.

    Evaluated through the exact identity R_mu >= 1-eps  <=>  Delta_mu >=
    kappa_tilde, so the result is bit-identical to the classical margin
    test at the effective stability (ties within TIE_TOL satisfied).
    """
    if params.sigma <= 0.0:
        raise DomainError("quantum feasibility requires sigma > 0")
    deltas = stabilities(w, ps).deltas
    return bool(np.all(deltas >= effective_stability(params) - TIE_TOL))


# ---------------------------------------------------------------------------
# empirical capacity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalProbe:
    alpha: float
    p: int
    sat: int
    trials: int
    failures: int

    @property
    def p_sat(self) -> float:
        effective = self.trials - self.failures
        return self.sat / effective if effective > 0 else math.nan


@dataclass(frozen=True)
class EmpiricalCapacityResult:
    alpha_hat: float
    ci_halfwidth: float
    threshold: float
    quantum: bool
    probes: tuple[EmpiricalProbe, ...]

    @property
    def total_failures(self) -> int:
        return sum(pr.failures for pr in self.probes)

    @property
    def total_trials(self) -> int:
        return sum(pr.trials for pr in self.probes)


def _wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _logistic(alpha: np.ndarray, a: float, b: float) -> np.ndarray:
    z = np.clip((alpha - a) / b, -700.0, 700.0)  # exp saturates, no overflow
    return 1.0 / (1.0 + np.exp(z))


def _fit_crossing(alphas: np.ndarray, p_hats: np.ndarray, a0: float) -> float:
    """Least-squares logistic fit; returns the fitted midpoint."""
    spread = max(float(alphas.max() - alphas.min()), 1e-3)

    def resid(theta):
        return _logistic(alphas, theta[0], theta[1]) - p_hats

    res = least_squares(
        resid,
        x0=np.array([a0, 0.1 * spread]),
        bounds=(np.array([0.01, 1e-4]), np.array([20.0, 10.0])),
        xtol=1e-12, ftol=1e-12, gtol=1e-12,
    )
    return float(res.x[0])


def _check_monotone(probes: Sequence[EmpiricalProbe]) -> None:
    ordered = sorted(probes, key=lambda pr: pr.alpha)
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            pi, pj = ordered[i], ordered[j]
            ni = pi.trials - pi.failures
            nj = pj.trials - pj.failures
            if ni == 0 or nj == 0:
                continue
            se = math.sqrt(pi.p_sat * (1 - pi.p_sat) / ni
                           + pj.p_sat * (1 - pj.p_sat) / nj) + 1e-9
            if pj.p_sat - pi.p_sat > 5.0 * se + 0.05:
                raise MonotonicityError(
                    f"P_SAT increases from alpha={pi.alpha:.4g} ({pi.p_sat:.3f}) "
                    f"to alpha={pj.alpha:.4g} ({pj.p_sat:.3f}) beyond noise"
                )


def empirical_capacity(n: int, params: TheoryParams, quantum: bool, trials: int,
                       seed: int, dist: Literal["binary", "gaussian"] = "gaussian",
                       probes: int = 12, tol: float = 1e-7, threads: int = 1,
                       bootstrap: int = 200,
                       alpha_range: tuple[float, float] = (0.1, 10.0),
                       ) -> EmpiricalCapacityResult:
    """Locate the load where the feasibility probability crosses 1/2.

    Bisects alpha, estimating P_SAT at each probe from fresh instances
    (one Philox stream per (seed, probe, trial), so results do not depend
    on thread count), then fits a logistic curve through all probes; the
    returned alpha_hat is the fitted midpoint and the half-width comes from
    a parametric bootstrap of the probe counts.
    """
    if n < 10:
        raise DomainError(f"n must be >= 10, got {n}")
    if trials < 50:
        raise DomainError(f"trials must be >= 50, got {trials}")
    threshold = effective_stability(params) if quantum else params.kappa
    lo, hi = alpha_range

    probe_list: list[EmpiricalProbe] = []
    for probe_idx in range(probes):
        alpha = 0.5 * (lo + hi)
        p = max(1, round(alpha * n))

        def one_trial(t: int) -> int:
            ps = generate_patterns(n, p, dist, substream_seed(seed, probe_idx, t))
            try:
                return 1 if _margin_decision(ps.signed_patterns(), threshold,
                                             tol, seed=ps.seed) else 0
            except ConvergenceError:
                return -1

        outcomes = _indexed_map(one_trial, trials, threads)
        failures = sum(1 for o in outcomes if o < 0)
        sat = sum(1 for o in outcomes if o == 1)
        probe = EmpiricalProbe(alpha=alpha, p=p, sat=sat, trials=trials,
                               failures=failures)
        probe_list.append(probe)
        if probe.p_sat >= 0.5:
            lo = alpha
        else:
            hi = alpha

    _check_monotone(probe_list)

    alphas = np.array([pr.alpha for pr in probe_list])
    p_hats = np.array([pr.p_sat for pr in probe_list])
    a0 = 0.5 * (lo + hi)
    alpha_hat = _fit_crossing(alphas, p_hats, a0)

    boot = np.empty(bootstrap)
    for b in range(bootstrap):
        g = stream(seed, 0xB007, b)
        resampled = np.array([
            g.binomial(pr.trials - pr.failures, pr.p_sat) / max(1, pr.trials - pr.failures)
            for pr in probe_list
        ])
        boot[b] = _fit_crossing(alphas, resampled, a0)
    lo_q, hi_q = np.quantile(boot, [0.025, 0.975])
    ci_halfwidth = float(0.5 * (hi_q - lo_q))

    return EmpiricalCapacityResult(
        alpha_hat=alpha_hat, ci_halfwidth=ci_halfwidth, threshold=threshold,
        quantum=quantum, probes=tuple(probe_list),
    )


def _indexed_map(fn, count: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(count)))
