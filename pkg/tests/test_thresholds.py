"""Tests for the deviation thresholds and tuning constants.

High-precision expected values were computed independently with mpmath at 50
decimal digits and frozen here as literals.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from eivsel.model import EmptyInputError
from eivsel.thresholds import (
    DomainError,
    NoiseConstants,
    ThresholdSet,
    compute_m2,
    lemma1_thresholds,
    lemma2_thresholds,
    simulation_tuning,
    tuning_from_lemmas,
)

# Benchmark noise level: sigma = 0.128, sigma_star = sqrt(0.5).
SIGMA = 0.128
SIGMA_STAR = math.sqrt(0.5)


def close(a, b, tol=1e-13):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


class TestComputeM2:
    def test_identity_2x2(self):
        assert compute_m2(np.eye(2)) == 0.5

    def test_all_ones_3x2(self):
        assert compute_m2(np.ones((3, 2))) == 1.0

    def test_column_max(self):
        X = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 6.0]])
        assert close(compute_m2(X), 12.0)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            compute_m2(np.zeros((0, 3)))

    def test_non_matrix_rejected(self):
        with pytest.raises(DomainError):
            compute_m2(np.ones(4))


class TestNoiseConstants:
    def test_from_sigmas_defaults(self):
        nc = NoiseConstants.from_sigmas(0.2, 0.5)
        assert close(nc.gamma0, 0.1)
        assert close(nc.t0, 10.0)
        assert close(nc.gamma2, 0.25)
        assert close(nc.t2, 4.0)
        assert nc.delta_bar == 0.0
        assert nc.b_eps == 0.0

    def test_zero_sigmas_stay_positive(self):
        nc = NoiseConstants.from_sigmas(0.0, 0.0)
        assert nc.gamma0 > 0 and nc.gamma2 > 0
        assert math.isfinite(nc.t0) and math.isfinite(nc.t2)

    def test_negative_sigma_rejected(self):
        with pytest.raises(DomainError):
            NoiseConstants.from_sigmas(-0.1, 0.5)

    def test_nonpositive_constants_rejected(self):
        with pytest.raises(DomainError):
            NoiseConstants(sigma=0.1, sigma_star=0.1, gamma0=0.0, t0=1.0,
                           gamma2=1.0, t2=1.0)


class TestLemma1:
    def test_zero_sigma_kills_delta2(self):
        nc = NoiseConstants.from_sigmas(0.0, 0.7)
        for n, p, eps in [(10, 3, 0.1), (300, 10, 0.05), (50, 1, 0.5)]:
            assert lemma1_thresholds(nc, 1.0, n, p, eps)[1] == 0.0

    def test_forced_delta2_equals_one(self):
        # log(2p/eps) = 1 at p=1, eps=2/e; then delta2 = sqrt(2/n) = 1 at n=2.
        nc = NoiseConstants.from_sigmas(1.0, 0.5)
        d = lemma1_thresholds(nc, 1.0, 2, 1, 2.0 / math.e)
        assert close(d[1], 1.0)

    def test_tail_threshold_branches(self):
        # gamma0 = t0 = 1 and log(N/eps) = 1 at n = 8 gives
        # max(sqrt(2/8), 2/8) = 0.5 for the delta3 bound.
        nc = NoiseConstants(sigma=0.0, sigma_star=0.0, gamma0=1.0, t0=1.0,
                            gamma2=1.0, t2=1.0)
        d = lemma1_thresholds(nc, 1.0, 8, 1, 2.0 / math.e)
        assert close(d[2], 0.5)

    def test_delta3_equals_delta5(self):
        nc = NoiseConstants.from_sigmas(0.3, 0.4)
        d = lemma1_thresholds(nc, 1.2, 100, 7, 0.1)
        assert d[2] == d[4]

    def test_p1_has_no_offdiagonal(self):
        nc = NoiseConstants.from_sigmas(0.3, 0.4)
        assert lemma1_thresholds(nc, 1.0, 100, 1, 0.1)[3] == 0.0

    def test_benchmark_point_frozen_values(self):
        nc = NoiseConstants.from_sigmas(SIGMA, SIGMA_STAR)
        d = lemma1_thresholds(nc, 1.0, 300, 10, 0.05)
        assert close(d[0], 0.16627336567734902)
        assert close(d[1], 0.025581784553312822)
        assert close(d[2], 0.018089053332500771)
        assert close(d[3], 0.020232561150169105)
        assert close(d[4], 0.018089053332500771)

    def test_second_frozen_point(self):
        nc = NoiseConstants.from_sigmas(0.3, 0.7)
        d = lemma1_thresholds(nc, 1.44, 1000, 300, 0.1)
        assert close(d[0], 0.14256904657361307)
        assert close(d[1], 0.047485937104958577)
        assert close(d[2], 0.027700129977892503)
        assert close(d[3], 0.034769825174133538)

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.2, 1.5])
    def test_eps_domain(self, eps):
        nc = NoiseConstants.from_sigmas(0.1, 0.1)
        with pytest.raises(DomainError):
            lemma1_thresholds(nc, 1.0, 10, 2, eps)

    def test_negative_m2_rejected(self):
        nc = NoiseConstants.from_sigmas(0.1, 0.1)
        with pytest.raises(DomainError):
            lemma1_thresholds(nc, -1.0, 10, 2, 0.1)


class TestLemma2:
    def test_zero_sigma_star_kills_delta1_prime(self):
        nc = NoiseConstants.from_sigmas(0.4, 0.0)
        assert lemma2_thresholds(nc, 1.0, 50, 4, 0.1)[0] == 0.0

    def test_forced_delta1_prime_equals_one(self):
        nc = NoiseConstants.from_sigmas(0.5, 1.0)
        d = lemma2_thresholds(nc, 1.0, 2, 1, 2.0 / math.e)
        assert close(d[0], 1.0)

    def test_tail_threshold_branches(self):
        # gamma2 = 2, t2 = 1, log(2p/eps) = 1, n = 2: max(2, 1) = 2.
        nc = NoiseConstants(sigma=0.0, sigma_star=0.0, gamma0=1.0, t0=1.0,
                            gamma2=2.0, t2=1.0)
        d = lemma2_thresholds(nc, 1.0, 2, 1, 2.0 / math.e)
        assert close(d[1], 2.0)

    def test_benchmark_point_frozen_values(self):
        nc = NoiseConstants.from_sigmas(SIGMA, SIGMA_STAR)
        d = lemma2_thresholds(nc, 1.0, 300, 10, 0.05)
        assert close(d[0], 0.14132072916016228)
        assert close(d[1], 0.099928845911378212)

    def test_second_frozen_point(self):
        nc = NoiseConstants.from_sigmas(0.3, 0.7)
        d = lemma2_thresholds(nc, 1.44, 1000, 300, 0.1)
        assert close(d[0], 0.11080051991157001)
        assert close(d[1], 0.064633636615082508)


class TestTuningFromLemmas:
    def test_all_zero(self):
        assert tuning_from_lemmas((0, 0, 0, 0, 0), (0, 0), 0.0) == (0, 0, 0)

    def test_direct_sums(self):
        mu, tau, beta = tuning_from_lemmas(
            (0.0, 0.05, 0.05, 0.0, 0.05), (0.1, 0.2), 0.3
        )
        assert close(mu, 0.3)
        assert close(tau, 0.1)
        assert close(beta, 0.35)

    def test_exact_diagonal_estimate(self):
        _, _, beta = tuning_from_lemmas((0, 0, 0, 0, 0.2), (0, 0), 0.0)
        assert close(beta, 0.2)

    def test_negative_b_eps_rejected(self):
        with pytest.raises(DomainError):
            tuning_from_lemmas((0, 0, 0, 0, 0), (0, 0), -0.1)


class TestSimulationTuning:
    # (n, p, tau, b_eps) frozen from the mpmath oracle at eps = 0.05,
    # sigma = 0.128, sigma_star_sq = 0.5.
    FROZEN = [
        (300, 10, 0.017010548857843383, 0.06644745647595071),
        (300, 50, 0.019423067256129873, 0.075871356469257318),
        (300, 100, 0.020374263659262018, 0.079586967418992259),
        (300, 300, 0.021797006647295693, 0.0851445572159988),
    ]

    @pytest.mark.parametrize("n,p,tau,b_eps", FROZEN)
    def test_frozen_benchmark_values(self, n, p, tau, b_eps):
        got_tau, got_b = simulation_tuning(SIGMA, 0.5, n, p, 0.05)
        assert close(got_tau, tau)
        assert close(got_b, b_eps)

    def test_zero_sigma(self):
        tau, _ = simulation_tuning(0.0, 0.5, 300, 10, 0.05)
        assert tau == 0.0

    def test_forced_unit_rate(self):
        # p/eps = e and n = 1 force the square root to 1.
        tau, b = simulation_tuning(1.0, 2.0, 1, 1, 1.0 / math.e)
        assert close(tau, 1.0)
        assert close(b, 2.0)

    def test_eps_domain(self):
        with pytest.raises(DomainError):
            simulation_tuning(0.1, 0.5, 300, 10, 0.0)


class TestMonotonicity:
    NS = (40, 100, 300, 1000)
    PS = (2, 5, 10, 40)
    EPSES = (0.3, 0.1, 0.05, 0.01)

    def all_deltas(self, n, p, eps):
        nc = NoiseConstants.from_sigmas(0.3, 0.6)
        d1, d2, d3, d4, d5 = lemma1_thresholds(nc, 1.3, n, p, eps)
        d1p, d4p = lemma2_thresholds(nc, 1.3, n, p, eps)
        return np.array([d1, d2, d3, d4, d5, d1p, d4p])

    def test_nonincreasing_in_n(self):
        for p in self.PS:
            for eps in self.EPSES:
                vals = [self.all_deltas(n, p, eps) for n in self.NS]
                for a, b in zip(vals, vals[1:]):
                    assert (b <= a + 1e-15).all()

    def test_nondecreasing_in_p(self):
        for n in self.NS:
            for eps in self.EPSES:
                vals = [self.all_deltas(n, p, eps) for p in self.PS]
                for a, b in zip(vals, vals[1:]):
                    assert (b >= a - 1e-15).all()

    def test_nondecreasing_in_confidence(self):
        for n in self.NS:
            for p in self.PS:
                vals = [self.all_deltas(n, p, eps) for eps in self.EPSES]
                for a, b in zip(vals, vals[1:]):
                    assert (b >= a - 1e-15).all()

    def test_linear_scaling_on_gaussian_branch(self):
        # With n large the sqrt branch of the tail bound is active, so
        # delta3 scales linearly in gamma0 when t0 is held fixed.
        base = NoiseConstants(sigma=0.1, sigma_star=0.1, gamma0=0.2, t0=50.0,
                              gamma2=0.2, t2=50.0)
        doubled = NoiseConstants(sigma=0.1, sigma_star=0.1, gamma0=0.4, t0=50.0,
                                 gamma2=0.4, t2=50.0)
        d_base = lemma1_thresholds(base, 1.0, 100000, 5, 0.05)
        d_doub = lemma1_thresholds(doubled, 1.0, 100000, 5, 0.05)
        assert close(d_doub[2], 2.0 * d_base[2])
        assert close(d_doub[3], 2.0 * d_base[3])
        # delta1 and delta2 are always linear in their sigma.
        nc1 = NoiseConstants.from_sigmas(0.1, 0.2)
        nc2 = NoiseConstants.from_sigmas(0.2, 0.4)
        a = lemma1_thresholds(nc1, 1.0, 100, 5, 0.05)
        b = lemma1_thresholds(nc2, 1.0, 100, 5, 0.05)
        assert close(b[0], 2.0 * a[0])
        assert close(b[1], 2.0 * a[1])


class TestThresholdSet:
    def test_compute_benchmark_point(self):
        nc = NoiseConstants.from_sigmas(SIGMA, SIGMA_STAR,
                                        b_eps=0.06644745647595071)
        ts = ThresholdSet.compute(nc, 1.0, 300, 10, 0.05)
        assert close(ts.delta1, 0.16627336567734902)
        assert close(ts.delta2, 0.025581784553312822)
        assert close(ts.delta3, 0.018089053332500771)
        assert close(ts.delta4, 0.020232561150169105)
        assert ts.delta3 == ts.delta5
        assert close(ts.delta1_prime, 0.14132072916016228)
        assert close(ts.delta4_prime, 0.099928845911378212)
        assert close(ts.mu, 0.24124957507154049)
        assert close(ts.tau, 0.043670837885813593)
        assert close(ts.beta, 0.084536509808451481)

    def test_invariants_enforced(self):
        kw = dict(m2=1.0, eps=0.05, delta1=0.1, delta2=0.1, delta3=0.1,
                  delta4=0.1, delta5=0.1, delta1_prime=0.1, delta4_prime=0.1,
                  mu=0.2, tau=0.2, beta=0.1)
        ThresholdSet(**kw)
        bad = dict(kw, delta5=0.2)
        with pytest.raises(DomainError):
            ThresholdSet(**bad)
        bad = dict(kw, mu=0.5)
        with pytest.raises(DomainError):
            ThresholdSet(**bad)
        bad = dict(kw, tau=0.5)
        with pytest.raises(DomainError):
            ThresholdSet(**bad)

    def test_kv_text_roundtrip(self):
        nc = NoiseConstants.from_sigmas(SIGMA, SIGMA_STAR)
        ts = ThresholdSet.compute(nc, 1.0, 300, 10, 0.05)
        text = ts.to_kv_text()
        assert text.endswith("\n")
        parsed = {}
        for line in text.strip().splitlines():
            key, _, val = line.partition(" = ")
            parsed[key] = float(val)
        for key, val in parsed.items():
            assert getattr(ts, key) == val
        assert set(parsed) == {
            "m2", "eps", "delta1", "delta2", "delta3", "delta4", "delta5",
            "delta1_prime", "delta4_prime", "mu", "tau", "beta",
        }
