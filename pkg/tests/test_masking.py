import math

import numpy as np
import pytest

from metacog import (
    DetMaskConfig,
    QuadSumUtility,
    SqrtSumUtility,
    epsilon_max,
    mask_deterministic,
    naive_response,
    pass_margin,
)


def probes_for(seed, k=10, m=2, low=0.2, high=2.5):
    return np.random.default_rng(seed).uniform(low, high, (k, m))


class TestPassMargin:
    def test_concave_nonnegative_at_optima(self):
        probes = probes_for(0)
        u = SqrtSumUtility()
        naive = np.stack([naive_response(u, a) for a in probes])
        assert pass_margin(naive, u, anchors=naive) >= 0

    def test_convex_family_flips_sign_and_stays_nonnegative(self):
        probes = probes_for(1)
        u = QuadSumUtility()
        naive = np.stack([naive_response(u, a) for a in probes])
        assert pass_margin(naive, u, anchors=naive) >= 0

    def test_identical_probes_give_zero(self):
        probes = np.tile([[1.0, 2.0]], (4, 1))
        for u in (SqrtSumUtility(), QuadSumUtility()):
            assert epsilon_max(probes, u) == pytest.approx(0.0, abs=1e-12)


class TestEpsilonMax:
    def test_two_epoch_sqrt_value(self):
        # explicit two-term minimum for probes (1,1) and (1,2)
        probes = np.array([[1.0, 1.0], [1.0, 2.0]])
        b1, b2 = np.array([0.5, 0.5]), np.array([2 / 3, 1 / 6])
        u1 = 2 * math.sqrt(0.5)
        u2 = math.sqrt(2 / 3) + math.sqrt(1 / 6)
        g1 = np.full(2, 1 / (2 * math.sqrt(0.5)))
        g2 = np.array([1 / (2 * math.sqrt(2 / 3)), 1 / (2 * math.sqrt(1 / 6))])
        expected = min(u1 + g1 @ (b2 - b1) - u2, u2 + g2 @ (b1 - b2) - u1)
        assert epsilon_max(probes, SqrtSumUtility()) == pytest.approx(expected, abs=1e-12)

    def test_concave_nonnegative(self):
        for seed in range(4):
            assert epsilon_max(probes_for(seed), SqrtSumUtility()) >= 0

    def test_single_epoch_rejected(self):
        with pytest.raises(ValueError):
            epsilon_max(np.array([[1.0, 2.0]]), SqrtSumUtility())


class TestMaskDeterministic:
    @pytest.mark.parametrize("u", [SqrtSumUtility(), QuadSumUtility()])
    def test_target_at_threshold_returns_unmasked(self, u):
        probes = probes_for(2)
        naive = np.stack([naive_response(u, a) for a in probes])
        top = epsilon_max(probes, u)
        result = mask_deterministic(probes, u, DetMaskConfig(epsilon=top, iters=400))
        assert result.perturbation == 0.0
        assert result.utility_loss == 0.0
        assert np.array_equal(result.masked, naive)
        assert result.feasible

    @pytest.mark.parametrize("u", [SqrtSumUtility(), QuadSumUtility()])
    def test_zero_target_kills_the_margin(self, u):
        probes = probes_for(3)
        cfg = DetMaskConfig(epsilon=0.0, iters=1000, seed=4)
        result = mask_deterministic(probes, u, cfg)
        assert result.feasible
        assert result.achieved_margin <= 1e-6
        assert result.perturbation > 0.0

    def test_budget_and_nonnegativity(self):
        probes = probes_for(5)
        u = SqrtSumUtility()
        top = epsilon_max(probes, u)
        result = mask_deterministic(probes, u, DetMaskConfig(epsilon=0.3 * top, iters=800))
        assert np.all(result.masked >= 0)
        assert np.abs((probes * result.masked).sum(axis=1) - 1.0).max() <= 1e-8

    def test_margin_within_tolerance(self):
        probes = probes_for(6)
        u = SqrtSumUtility()
        top = epsilon_max(probes, u)
        for frac in (0.0, 0.4, 0.8):
            cfg = DetMaskConfig(epsilon=frac * top, iters=800, seed=1)
            result = mask_deterministic(probes, u, cfg)
            assert result.feasible
            assert result.achieved_margin <= frac * top + 1e-6

    def test_perturbation_nonincreasing_in_target(self):
        probes = probes_for(7)
        u = SqrtSumUtility()
        top = epsilon_max(probes, u)
        carry = ()
        perts = []
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            cfg = DetMaskConfig(epsilon=frac * top, iters=800, seed=2)
            result = mask_deterministic(probes, u, cfg, extra_candidates=carry)
            carry = (result.masked,)
            perts.append(result.perturbation)
        for lo, hi in zip(perts[1:], perts[:-1]):
            assert lo <= hi + 1e-6

    def test_best_of_starts(self):
        probes = probes_for(8)
        u = SqrtSumUtility()
        cfg = DetMaskConfig(epsilon=0.0, iters=600, seed=3)
        result = mask_deterministic(probes, u, cfg)
        finite = [x for x in result.start_objectives if np.isfinite(x)]
        assert result.perturbation <= min(finite) + 1e-12

    def test_reproducible_for_fixed_seed(self):
        probes = probes_for(9)
        u = SqrtSumUtility()
        cfg = DetMaskConfig(epsilon=0.0, iters=500, seed=11)
        a = mask_deterministic(probes, u, cfg)
        b = mask_deterministic(probes, u, cfg)
        assert np.array_equal(a.masked, b.masked)
        assert a.perturbation == b.perturbation
        assert a.start_objectives == b.start_objectives

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DetMaskConfig(epsilon=0.0, starts=0)
