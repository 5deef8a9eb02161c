"""Perceptron instances: patterns, margins, feasibility, homodyne readout."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percap.capacity import TheoryParams, effective_stability, quantum_capacity
from percap.errors import DomainError
from percap.percep import (
    ABSTAIN,
    CORRECT,
    TIE_TOL,
    EmpiricalProbe,
    WeightVector,
    classify_classical,
    classify_quantum,
    empirical_capacity,
    generate_patterns,
    is_satisfiable,
    max_stability,
    quantum_feasible,
    quantum_outcome_counts,
    reliability,
    stabilities,
    xor_patterns,
)
from percap.rng import stream, substream_seed

import oracles


class TestGeneratePatterns:
    def test_determinism(self):
        a = generate_patterns(13, 7, "binary", 42)
        b = generate_patterns(13, 7, "binary", 42)
        assert np.array_equal(a.patterns, b.patterns)
        assert np.array_equal(a.labels, b.labels)

    def test_binary_entries(self):
        ps = generate_patterns(8, 30, "binary", 3)
        assert set(np.unique(ps.patterns)) == {-1.0, 1.0}
        assert set(np.unique(ps.labels)) <= {-1.0, 1.0}

    def test_binary_component_means(self):
        ps = generate_patterns(50, 5000, "binary", 11)
        assert np.max(np.abs(ps.patterns.mean(axis=0))) <= 0.05

    def test_gaussian_column_statistics(self):
        ps = generate_patterns(20, 2000, "gaussian", 5)
        assert np.max(np.abs(ps.patterns.mean(axis=0))) <= 5.0 / math.sqrt(2000)
        assert np.all(ps.patterns.var(axis=0) > 0.5)
        assert np.all(ps.patterns.var(axis=0) < 1.5)

    def test_binary_can_produce_full_square(self):
        # some seed realizes all four corners of {-1,1}^2 (found once, frozen)
        for seed in range(200):
            ps = generate_patterns(2, 4, "binary", seed)
            if len({tuple(row) for row in ps.patterns}) == 4:
                return
        raise AssertionError("no seed below 200 produced the full square")

    def test_domain(self):
        with pytest.raises(DomainError):
            generate_patterns(0, 5, "binary", 1)
        with pytest.raises(DomainError):
            generate_patterns(5, 5, "uniform", 1)


class TestStabilities:
    def test_single_aligned_pattern(self):
        ps = generate_patterns(16, 1, "binary", 2)
        w = ps.labels[0] * ps.patterns[0]
        d = stabilities(w, ps).deltas
        assert d[0] == pytest.approx(math.sqrt(16), rel=1e-12)

    def test_scale_invariance(self):
        ps = generate_patterns(10, 12, "gaussian", 4)
        w = stream(4, 1).standard_normal(10)
        d1 = stabilities(w, ps).deltas
        d3 = stabilities(3.0 * w, ps).deltas
        assert np.max(np.abs(d1 - d3)) <= 1e-12

    def test_cauchy_schwarz_bound(self):
        ps = generate_patterns(9, 40, "gaussian", 8)
        w = stream(8, 1).standard_normal(9)
        d = np.abs(stabilities(w, ps).deltas)
        norms = np.linalg.norm(ps.patterns, axis=1)
        assert np.all(d <= norms + 1e-12)

    def test_xor_never_separable(self):
        xor = xor_patterns()
        rng = stream(77)
        for _ in range(50):
            w = rng.standard_normal(2)
            assert stabilities(w, xor).deltas.min() < 0.0

    def test_zero_weights_rejected(self):
        ps = generate_patterns(4, 3, "binary", 1)
        with pytest.raises(DomainError):
            stabilities(np.zeros(4), ps)


class TestClassifyClassical:
    def test_aligned_pattern_recovered(self):
        ps = generate_patterns(12, 1, "binary", 9)
        w = ps.labels[0] * ps.patterns[0]
        assert classify_classical(w, ps)[0] == ps.labels[0]

    def test_sign_convention_at_zero(self):
        # an orthogonal weight makes some dot products exactly zero
        ps = generate_patterns(2, 3, "binary", 1)
        w = np.array([1.0, -1.0])
        out = classify_classical(w, ps)
        zeroed = ps.patterns @ w == 0.0
        assert np.all(out[zeroed] == 1.0)
        assert np.any(zeroed) or True

    def test_agreement_with_stabilities(self):
        ps = generate_patterns(15, 60, "gaussian", 10)
        w = stream(10, 1).standard_normal(15)
        correct = classify_classical(w, ps) == ps.labels
        assert np.array_equal(correct, stabilities(w, ps).deltas >= 0.0)


class TestMaxStability:
    def test_single_pattern_alignment(self):
        ps = generate_patterns(10, 1, "binary", 6)
        res = max_stability(ps)
        assert res.kappa_max == pytest.approx(math.sqrt(10), abs=1e-6)
        assert res.separable and not res.approximate

    def test_xor_infeasible(self):
        res = max_stability(xor_patterns())
        assert res.kappa_max <= 0.0
        assert res.approximate and not res.separable
        assert res.kappa_max == pytest.approx(-1.0, abs=1e-6)

    def test_reported_margin_matches_weights(self):
        for seed in (1, 2, 3):
            ps = generate_patterns(12, 18, "gaussian", seed)
            res = max_stability(ps)
            d = stabilities(res.w, ps).deltas
            assert d.min() == pytest.approx(res.kappa_max, abs=1e-6)

    def test_no_improving_perturbation(self):
        ps = generate_patterns(12, 18, "gaussian", 13)
        res = max_stability(ps)
        Z = ps.signed_patterns()
        u = res.w.w / np.linalg.norm(res.w.w)
        rng = stream(13, 99)
        base = float(np.min(Z @ u))
        for _ in range(1000):
            probe = u + 1e-4 * rng.standard_normal(12)
            probe /= np.linalg.norm(probe)
            assert float(np.min(Z @ probe)) <= base + 1e-5

    def test_sphere_norm(self):
        ps = generate_patterns(9, 14, "gaussian", 21)
        res = max_stability(ps)
        assert np.linalg.norm(res.w.w) ** 2 == pytest.approx(9.0, rel=1e-10)


class TestIsSatisfiable:
    def test_xor_unsat_at_zero(self):
        assert not is_satisfiable(xor_patterns(), 0.0, 1e-9)

    def test_single_pattern_generous_margin(self):
        ps = generate_patterns(16, 1, "binary", 31)
        assert is_satisfiable(ps, math.sqrt(16) / 2.0, 1e-9)

    def test_matches_max_stability(self):
        for seed in range(6):
            ps = generate_patterns(12, 20, "gaussian", seed)
            km = max_stability(ps).kappa_max
            for kappa in (0.0, 0.2, 0.6):
                want = km >= kappa - 1e-7
                if abs(km - kappa) < 1e-6:
                    continue  # knife edge: either answer honest
                assert is_satisfiable(ps, kappa, 1e-7) == want

    def test_cover_half_point(self):
        # P_SAT(p=2N) = 1/2 exactly; 400 seeds within 0.075
        trials = 400
        sat = sum(
            is_satisfiable(generate_patterns(15, 30, "gaussian",
                                             substream_seed(101, t)), 0.0, 1e-9)
            for t in range(trials)
        )
        assert abs(sat / trials - 0.5) <= 0.075

    def test_domain(self):
        ps = generate_patterns(5, 5, "gaussian", 1)
        with pytest.raises(DomainError):
            is_satisfiable(ps, 0.0, 0.0)
        with pytest.raises(DomainError):
            is_satisfiable(ps, -0.5, 1e-9)


class TestCoverOracle:
    @pytest.mark.slow
    @pytest.mark.parametrize("n,p", [(10, 15), (10, 20), (10, 25), (15, 30)])
    def test_sat_frequency(self, n, p):
        trials = 400
        theory = oracles.cover_p_sat(p, n)
        sat = sum(
            is_satisfiable(generate_patterns(n, p, "gaussian",
                                             substream_seed(55, n, p, t)), 0.0, 1e-9)
            for t in range(trials)
        )
        se = math.sqrt(theory * (1.0 - theory) / trials)
        assert abs(sat / trials - theory) <= 3.0 * se


class TestReliability:
    def test_at_threshold(self):
        assert reliability(0.7, 0.7, 0.4) == pytest.approx(0.5, abs=1e-15)

    def test_effective_stability_identity(self):
        params = TheoryParams(kappa=0.25, epsilon=0.1, sigma=0.6)
        kt = effective_stability(params)
        assert reliability(kt, 0.25, 0.6) == pytest.approx(0.9, abs=1e-12)

    def test_sampling_cross_check(self):
        # frequency of 'correct' over homodyne draws matches Phi((D-k)/s)
        n, kappa, sigma, shots = 10, 0.4, 0.8, 100_000
        ps = generate_patterns(n, 1, "gaussian", 12)
        w = stream(12, 5).standard_normal(n)
        delta = stabilities(w, ps).deltas[0]
        want = reliability(delta, kappa, sigma)
        counts = quantum_outcome_counts(w, ps.patterns[0], ps.labels[0],
                                        kappa, sigma, stream(12, 6), shots)
        se = math.sqrt(want * (1.0 - want) / shots)
        assert abs(counts[CORRECT] / shots - want) <= 4.0 * se

    def test_domain(self):
        with pytest.raises(DomainError):
            reliability(0.1, 0.0, 0.0)
        with pytest.raises(DomainError):
            reliability(0.1, 0.0, -1.0)

    def test_vector_form(self):
        from percap.percep import reliabilities
        from percap.specfun import std_normal_cdf

        ps = generate_patterns(8, 5, "gaussian", 17)
        w = stream(17, 4).standard_normal(8)
        params = TheoryParams(kappa=0.3, epsilon=0.2, sigma=0.7)
        rv = reliabilities(w, ps, params)
        deltas = stabilities(w, ps).deltas
        assert np.all((rv.r >= 0.0) & (rv.r <= 1.0))
        for r, d in zip(rv.r, deltas):
            assert r == std_normal_cdf((d - 0.3) / 0.7)


class TestClassifyQuantum:
    def test_classical_limit(self):
        n = 8
        ps = generate_patterns(n, 1, "gaussian", 44)
        w = ps.labels[0] * ps.patterns[0]  # delta > 0 by alignment
        rng = stream(44, 1)
        counts = quantum_outcome_counts(w, ps.patterns[0], ps.labels[0],
                                        0.0, 1e-12, rng, shots=10_000)
        assert counts[CORRECT] == 10_000

    def test_abstention_window(self):
        # orthogonal weights: outcome ~ N(0, |w|^2 s^2); abstain in (-k|w|, k|w|)
        kappa, sigma, shots = 0.6, 0.9, 100_000
        w = np.array([1.0, 0.0])
        x = np.array([0.0, 2.0])
        counts = quantum_outcome_counts(w, x, 1.0, kappa, sigma, stream(21), shots)
        from percap.specfun import std_normal_cdf
        want = std_normal_cdf(kappa / sigma) - std_normal_cdf(-kappa / sigma)
        se = math.sqrt(want * (1 - want) / shots)
        assert abs(counts[ABSTAIN] / shots - want) <= 4.0 * se

    def test_single_outcome_label(self):
        out = classify_quantum(np.array([1.0]), np.array([5.0]), 1.0, 0.0,
                               0.1, stream(2))
        assert out == CORRECT

    def test_rejects_bad_sigma(self):
        with pytest.raises(DomainError):
            classify_quantum(np.ones(2), np.ones(2), 1.0, 0.0, 0.0, stream(1))


class TestQuantumFeasibleIdentity:
    def test_epsilon_half_reduces_to_classical(self):
        ps = generate_patterns(10, 8, "gaussian", 61)
        w = stream(61, 2).standard_normal(10)
        params = TheoryParams(kappa=0.35, epsilon=0.5, sigma=1.3)
        classical = bool(np.all(stabilities(w, ps).deltas >= 0.35 - TIE_TOL))
        assert quantum_feasible(ps, w, params) == classical

    def test_identity_randomized(self):
        # both indicator forms agree on 1e5 randomized cases away from ties
        rng = stream(303)
        mismatches = 0
        checked = 0
        batch = 10_000
        for block in range(10):
            n = 6
            deltas = rng.uniform(-2.0, 3.0, size=batch)
            kappas = rng.uniform(0.0, 1.0, size=batch)
            sigmas = rng.uniform(1e-3, 1.0, size=batch)
            epsilons = rng.uniform(0.01, 0.49, size=batch)
            from percap.specfun import std_normal_cdf, std_normal_quantile
            for d, k, s, e in zip(deltas, kappas, sigmas, epsilons):
                kt = k + s * std_normal_quantile(1.0 - e)
                if abs(d - kt) <= TIE_TOL:
                    continue
                lhs = reliability(d, k, s) >= 1.0 - e
                rhs = d >= kt
                checked += 1
                mismatches += lhs != rhs
        assert checked > 90_000
        assert mismatches == 0

    def test_violated_constraint_fails(self):
        ps = generate_patterns(7, 5, "gaussian", 71)
        w = stream(71, 3).standard_normal(7)
        params = TheoryParams(kappa=0.0, epsilon=0.05, sigma=2.0)
        kt = effective_stability(params)
        deltas = stabilities(w, ps).deltas
        if np.any(deltas < kt - 1e-9):
            assert not quantum_feasible(ps, w, params)

    def test_sigma_zero_rejected(self):
        ps = generate_patterns(4, 2, "gaussian", 81)
        params = TheoryParams(kappa=0.1, epsilon=0.2, sigma=0.0)
        with pytest.raises(DomainError):
            quantum_feasible(ps, np.ones(4), params)


class TestEmpiricalCapacity:
    @pytest.mark.slow
    def test_classical_forty(self):
        params = TheoryParams(kappa=0.0, epsilon=0.5, sigma=0.0)
        res = empirical_capacity(n=40, params=params, quantum=False,
                                 trials=100, seed=11, probes=10)
        assert 1.7 <= res.alpha_hat <= 2.3
        assert res.ci_halfwidth > 0.0

    @pytest.mark.slow
    def test_quantum_forty(self):
        params = TheoryParams(kappa=0.0, epsilon=0.1, sigma=0.5)
        res = empirical_capacity(n=40, params=params, quantum=True,
                                 trials=100, seed=11, probes=10)
        theory = quantum_capacity(params)
        assert abs(res.alpha_hat - theory) <= 0.2 * theory

    @pytest.mark.slow
    def test_quantum_equals_classical_at_ktilde(self):
        qp = TheoryParams(kappa=0.0, epsilon=0.1, sigma=0.5)
        kt = effective_stability(qp)
        cp = TheoryParams(kappa=kt, epsilon=0.5, sigma=0.0)
        res_q = empirical_capacity(n=20, params=qp, quantum=True,
                                   trials=60, seed=7, probes=8)
        res_c = empirical_capacity(n=20, params=cp, quantum=False,
                                   trials=60, seed=7, probes=8)
        assert res_q.alpha_hat == res_c.alpha_hat
        assert res_q.probes == res_c.probes

    @pytest.mark.slow
    def test_thread_count_invariance(self):
        params = TheoryParams(kappa=0.0, epsilon=0.5, sigma=0.0)
        r1 = empirical_capacity(n=15, params=params, quantum=False,
                                trials=50, seed=3, probes=6, threads=1)
        r4 = empirical_capacity(n=15, params=params, quantum=False,
                                trials=50, seed=3, probes=6, threads=4)
        assert r1 == r4

    def test_probe_accounting(self):
        pr = EmpiricalProbe(alpha=1.0, p=10, sat=30, trials=60, failures=10)
        assert pr.p_sat == pytest.approx(0.6)

    def test_domain(self):
        params = TheoryParams(kappa=0.0, epsilon=0.5, sigma=0.0)
        with pytest.raises(DomainError):
            empirical_capacity(n=5, params=params, quantum=False, trials=60, seed=1)
        with pytest.raises(DomainError):
            empirical_capacity(n=20, params=params, quantum=False, trials=10, seed=1)


class TestSatMonotonicity:
    """Ensemble SAT frequency decreases in alpha, kappa, and sigma."""

    @pytest.mark.slow
    def test_decreasing_in_alpha_kappa_sigma(self):
        n, trials = 12, 120

        def p_sat(p, threshold, tag):
            return sum(
                is_satisfiable(
                    generate_patterns(n, p, "gaussian", substream_seed(66, tag, t)),
                    threshold, 1e-7)
                for t in range(trials)
            ) / trials

        noise = 3.0 * math.sqrt(0.25 / trials)
        by_alpha = [p_sat(p, 0.0, 0) for p in (6, 18, 30)]
        assert all(b <= a + noise for a, b in zip(by_alpha, by_alpha[1:]))
        by_kappa = [p_sat(12, k, 1) for k in (0.0, 0.4, 0.9)]
        assert all(b <= a + noise for a, b in zip(by_kappa, by_kappa[1:]))
        # quantum: larger sigma means a larger effective threshold
        sigmas = (0.2, 0.6, 1.2)
        by_sigma = [
            p_sat(12, effective_stability(
                TheoryParams(kappa=0.0, epsilon=0.1, sigma=s)), 2)
            for s in sigmas
        ]
        assert all(b <= a + noise for a, b in zip(by_sigma, by_sigma[1:]))


class TestCircuitReadoutAgreement:
    """Sampled homodyne classification agrees with the reliability law."""

    def test_end_to_end_frequency(self):
        from percap.qsim import homodyne_sample, run_perceptron_circuit

        n, kappa, sigma, shots = 6, 0.3, 0.7, 100_000
        rng = stream(909)
        x = rng.standard_normal(n)
        w = rng.standard_normal(n)
        w[w == 0.0] = 0.5
        xi = 1.0
        mean, var, state = run_perceptron_circuit(x, w, np.full(n, sigma))
        norm = float(np.linalg.norm(w))
        assert mean == pytest.approx(float(w @ x), rel=1e-10, abs=1e-10)
        assert var == pytest.approx(sigma**2 * norm**2, rel=1e-10)
        s = homodyne_sample(state, n - 1, stream(909, 1), shots)
        assigned = np.where(s > kappa * norm, 1.0,
                            np.where(s < -kappa * norm, -1.0, 0.0))
        freq = float(np.mean(assigned == xi))
        delta = xi * float(w @ x) / norm
        want = reliability(delta, kappa, sigma)
        se = math.sqrt(want * (1.0 - want) / shots)
        assert abs(freq - want) <= 4.0 * se


class TestWeightVector:
    def test_normalizes_to_sphere(self):
        wv = WeightVector(w=np.array([3.0, 4.0]), n=2)
        assert np.linalg.norm(wv.w) ** 2 == pytest.approx(2.0, rel=1e-12)

    def test_rejects_zero(self):
        with pytest.raises(DomainError):
            WeightVector(w=np.zeros(3), n=3)

    @given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=50, deadline=None)
    def test_sphere_constraint_property(self, n, seed):
        g = stream(seed).standard_normal(n)
        if np.linalg.norm(g) == 0.0:
            return
        wv = WeightVector(w=g, n=n)
        assert abs(np.linalg.norm(wv.w) ** 2 - n) <= 1e-10 * n
