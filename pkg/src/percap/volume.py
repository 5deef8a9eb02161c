"""Monte Carlo estimation of the feasible-weight volume on the sphere.

The object of interest is the fraction V of the sphere ||w||^2 = N on
which every pattern margin clears a threshold.  Two estimators:

* ``hit_or_miss`` -- plain uniform sampling; exact in expectation but dead
  in the regime V ~ exp(N * F) with F < 0 that the theory predicts.
* ``sequential_volume`` -- factorizes V over constraints, V = prod_mu
  Pr(constraint mu | previous ones), each factor estimated with a
  great-circle hit-and-run chain confined to the current feasible region
  (constraints inducted in seeded random order).

``log_c_n`` evaluates the reference surface measure of the radius-sqrt(N)
sphere, and ``cap_log_fraction``/``cap_fraction`` give the exact
single-constraint cap measure through the regularized incomplete beta
function, which the tests use as a closed-form oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import betainc

from . import _kernels
from .errors import DomainError, StageFailureError
from .percep import TIE_TOL, PatternSet, WeightVector

__all__ = [
    "VolumeEstimate",
    "SelfAveragingRow",
    "sample_sphere",
    "hit_or_miss",
    "sequential_volume",
    "self_averaging_probe",
    "log_c_n",
    "cap_fraction",
    "cap_log_fraction",
    "hit_and_run_samples",
]

#: zero-hit runs report the rule-of-three upper bound ln(3/samples)/N
_RULE_OF_THREE = 3.0


@dataclass(frozen=True)
class VolumeEstimate:
    """(1/N) ln V-hat with a delta-method standard error.

    ``bound_only`` marks a hit-or-miss run with zero hits, in which case
    ``log_v_over_n`` is a ~95% upper bound rather than an estimate.
    """

    log_v_over_n: float
    std_error: float
    method: Literal["hit_or_miss", "sequential"]
    samples_used: int
    n: int
    constraints: int
    bound_only: bool = False

    def __post_init__(self) -> None:
        if self.std_error < 0.0:
            raise DomainError("std_error must be nonnegative")
        if self.method not in ("hit_or_miss", "sequential"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.log_v_over_n > 3.0 * self.std_error + 1e-12:
            raise DomainError("volume estimate exceeds the whole sphere")


def sample_sphere(n: int, rng: np.random.Generator) -> WeightVector:
    """Uniform point on the radius-sqrt(N) sphere (normalized Gaussian)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    g = rng.standard_normal(n)
    return WeightVector(w=g, n=n)


def _feasible_counts(ps: PatternSet, threshold: float, samples: int,
                     rng: np.random.Generator, block: int = 4096) -> int:
    """Hits among `samples` uniform sphere directions (vectorized blocks)."""
    Z = ps.signed_patterns()
    hits = 0
    done = 0
    while done < samples:
        b = min(block, samples - done)
        g = rng.standard_normal((b, ps.n_features))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        margins = g @ Z.T
        hits += int(np.sum(np.min(margins, axis=1) >= threshold - TIE_TOL))
        done += b
    return hits


def hit_or_miss(ps: PatternSet, threshold: float, samples: int,
                rng: np.random.Generator) -> VolumeEstimate:
    """Fraction of uniform sphere samples satisfying every margin constraint."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if ps.n_patterns == 0:
        return VolumeEstimate(0.0, 0.0, "hit_or_miss", samples, ps.n_features, 0)
    hits = _feasible_counts(ps, threshold, samples, rng)
    n = ps.n_features
    if hits == 0:
        bound = math.log(_RULE_OF_THREE / samples) / n
        return VolumeEstimate(bound, 0.0, "hit_or_miss", samples, n,
                              ps.n_patterns, bound_only=True)
    v_hat = hits / samples
    se_v = math.sqrt(v_hat * (1.0 - v_hat) / samples)
    return VolumeEstimate(math.log(v_hat) / n, se_v / (v_hat * n),
                          "hit_or_miss", samples, n, ps.n_patterns)


def hit_and_run_samples(Z: np.ndarray, threshold: float, start: np.ndarray,
                        rng: np.random.Generator, n_samples: int,
                        burn_in: int = 50, thin: int = 10,
                        ) -> tuple[np.ndarray, float]:
    """Thinned chain samples on the unit sphere inside {u : Z u >= threshold}.

    Returns (samples, max_norm_drift); the start point must be feasible.
    """
    steps = burn_in + thin * n_samples
    normals = rng.standard_normal((steps, start.size))
    uniforms = rng.random(steps)
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    return _kernels.hit_and_run_chain(
        Z, threshold - TIE_TOL, np.asarray(start, dtype=np.float64),
        normals, uniforms, burn_in, thin, n_samples,
    )


def sequential_volume(ps: PatternSet, threshold: float, samples_per_stage: int,
                      rng: np.random.Generator, burn_in: int = 50,
                      thin: int = 10, retries: int = 3) -> VolumeEstimate:
    """Chained conditional-probability estimate of the feasible volume.

    V = prod_mu Pr(margin_mu >= threshold | earlier constraints hold), one
    hit-and-run stage per constraint, constraints visited in a seeded
    random order.  A stage whose acceptance count stays zero through the
    retry budget raises StageFailureError naming the constraint.
    """
    if samples_per_stage < 100:
        raise DomainError(f"samples_per_stage must be >= 100, got {samples_per_stage}")
    n = ps.n_features
    p = ps.n_patterns
    Z = ps.signed_patterns()
    order = rng.permutation(p)

    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    log_v = 0.0
    var_sum = 0.0
    samples_used = 0
    for k, idx in enumerate(order):
        z_new = Z[idx]
        active = np.ascontiguousarray(Z[order[:k]])
        hits = 0
        total = 0
        last_hit = None
        batch = samples_per_stage
        for _ in range(retries):
            samples, _ = hit_and_run_samples(
                active, threshold, u, rng, batch, burn_in, thin
            )
            u = samples[-1]
            mask = samples @ z_new >= threshold - TIE_TOL
            got = int(np.sum(mask))
            hits += got
            total += batch
            if got:
                last_hit = samples[np.flatnonzero(mask)[-1]]
            if hits > 0:
                break
            batch *= 4  # a rare small conditional needs geometrically more looks
        samples_used += total
        if hits == 0:
            raise StageFailureError(stage=k, constraint=int(idx), samples=total)
        p_hat = hits / total
        log_v += math.log(p_hat)
        if p_hat < 1.0:
            var_sum += (1.0 - p_hat) / (p_hat * total)
        u = last_hit
    return VolumeEstimate(log_v / n, math.sqrt(var_sum) / n, "sequential",
                          samples_used, n, p)


@dataclass(frozen=True)
class SelfAveragingRow:
    """Disorder statistics of (1/N) ln V-hat at one system size."""

    n: int
    draws: int
    mean: float
    std: float | None  # None when draws == 1 (not applicable)
    failures: int


def self_averaging_probe(n_list: list[int], alpha: float, kappa: float,
                         draws: int, seed: int, samples_per_stage: int = 400,
                         dist: Literal["binary", "gaussian"] = "gaussian",
                         threads: int = 1) -> list[SelfAveragingRow]:
    """Disorder mean/std of the sequential estimate across system sizes.

    Each (size, draw) pair owns a Philox stream derived from the seed, so
    the table is reproducible and thread-count invariant.  Stage failures
    are counted per size and excluded from the statistics.
    """
    if draws < 1:
        raise DomainError(f"draws must be >= 1, got {draws}")
    from .percep import generate_patterns, _indexed_map
    from .rng import stream, substream_seed

    rows = []
    for n in n_list:
        p = max(1, round(alpha * n))

        def one_draw(d: int, n=n, p=p) -> float | None:
            ps = generate_patterns(n, p, dist, substream_seed(seed, n, d))
            try:
                est = sequential_volume(ps, kappa, samples_per_stage,
                                        stream(seed, n, d, 1))
            except StageFailureError:
                return None
            return est.log_v_over_n

        values = _indexed_map(one_draw, draws, threads)
        good = np.array([v for v in values if v is not None])
        failures = sum(1 for v in values if v is None)
        mean = float(good.mean()) if good.size else math.nan
        std = float(good.std(ddof=1)) if good.size > 1 else None
        rows.append(SelfAveragingRow(n=n, draws=draws, mean=mean, std=std,
                                     failures=failures))
    return rows


def log_c_n(n: int) -> float:
    """ln of the surface measure of the radius-sqrt(N) sphere in N dims:
    (N/2) ln pi + (N/2 - 1) ln N - ln Gamma(N/2)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    half = 0.5 * n
    return half * math.log(math.pi) + (half - 1.0) * math.log(n) - math.lgamma(half)


def cap_log_fraction(t: float, n: int) -> float:
    """ln of the sphere fraction with first coordinate >= t (|t| <= 1)."""
    return math.log(cap_fraction(t, n))


def cap_fraction(t: float, n: int) -> float:
    """Exact fraction of the unit sphere in n dims with u_1 >= t.

    The first coordinate of a uniform direction has density proportional
    to (1 - x^2)^((n-3)/2), so the tail mass is half a regularized
    incomplete beta function.
    """
    if n < 2:
        raise DomainError(f"cap fraction needs n >= 2, got {n}")
    if not (-1.0 <= t <= 1.0):
        raise DomainError(f"t must lie in [-1, 1], got {t!r}")
    a = 0.5 * (n - 1)
    if t >= 0.0:
        return 0.5 * float(betainc(a, 0.5, 1.0 - t * t))
    return 1.0 - 0.5 * float(betainc(a, 0.5, 1.0 - t * t))
