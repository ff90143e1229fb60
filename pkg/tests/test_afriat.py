import math

import numpy as np
import pytest

from metacog import (
    ProbeResponseDataset,
    SqrtSumUtility,
    afriat_feasible,
    afriat_margin,
    check_garp,
    naive_response,
    reconstruct_utility,
)
from metacog.afriat import AfriatCertificate

from conftest import sqrt_optimal_dataset


class TestGarp:
    def test_single_observation_always_passes(self):
        d = ProbeResponseDataset([[1.0, 2.0]], [[3.0, 0.1]])
        assert check_garp(d) is True

    def test_hand_built_violation(self, violating_dataset):
        assert check_garp(violating_dataset) is False

    def test_generated_maximizer_data_passes(self, sqrt_dataset_k5):
        assert check_garp(sqrt_dataset_k5) is True


class TestAfriatFeasibility:
    def test_single_observation_certificate(self):
        d = ProbeResponseDataset([[1.0, 2.0]], [[0.5, 0.25]])
        cert = afriat_feasible(d)
        assert cert is not None
        assert np.allclose(cert.u_vals, [1.0]) and np.allclose(cert.lambda_vals, [1.0])

    def test_violating_dataset_infeasible(self, violating_dataset):
        assert afriat_feasible(violating_dataset) is None

    def test_generated_dataset_feasible_with_slack(self, sqrt_dataset_k5):
        cert = afriat_feasible(sqrt_dataset_k5)
        assert cert is not None
        assert cert.slack >= -1e-9
        assert np.all(cert.u_vals > 0) and np.all(cert.lambda_vals > 0)

    def test_agrees_with_garp_on_random_datasets(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            k = int(rng.integers(1, 7))
            m = int(rng.integers(1, 4))
            d = ProbeResponseDataset(
                rng.uniform(0.1, 3.0, (k, m)), rng.uniform(0.1, 3.0, (k, m))
            )
            assert check_garp(d) == (afriat_feasible(d) is not None)

    def test_scale_invariance(self, sqrt_dataset_k5, violating_dataset):
        for d, expected in ((sqrt_dataset_k5, True), (violating_dataset, False)):
            for c in (0.25, 4.0):
                scaled = ProbeResponseDataset(d.probes / c, d.responses * c)
                assert (afriat_feasible(scaled) is not None) == expected


class TestReconstruction:
    def test_interpolates_certificate_levels(self, sqrt_dataset_k5):
        cert = afriat_feasible(sqrt_dataset_k5)
        u_hat = reconstruct_utility(cert, sqrt_dataset_k5)
        for t in range(sqrt_dataset_k5.k):
            assert u_hat.value(sqrt_dataset_k5.responses[t]) == pytest.approx(
                cert.u_vals[t], abs=1e-6
            )

    def test_single_piece_closed_form(self):
        d = ProbeResponseDataset([[1.0, 2.0]], [[0.4, 0.3]])
        cert = AfriatCertificate(np.array([0.0]), np.array([1.0]), 0.0)
        u_hat = reconstruct_utility(cert, d)
        rng = np.random.default_rng(0)
        for _ in range(20):
            beta = rng.uniform(0, 2, 2)
            expected = d.probes[0] @ (beta - d.responses[0])
            assert u_hat.value(beta) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_each_component(self, sqrt_dataset_k5):
        cert = afriat_feasible(sqrt_dataset_k5)
        u_hat = reconstruct_utility(cert, sqrt_dataset_k5)
        for t in range(sqrt_dataset_k5.k):
            base = sqrt_dataset_k5.responses[t]
            assert u_hat.value(base + 0.1) >= u_hat.value(base) - 1e-12

    def test_rationalizes_on_budget_grid(self):
        # u_hat(b_t) must beat every affordable bundle on a fine grid
        d = sqrt_optimal_dataset(5, 2, seed=9)
        cert = afriat_feasible(d)
        u_hat = reconstruct_utility(cert, d)
        for t in range(d.k):
            probe = d.probes[t]
            g1 = np.arange(0.0, 1.0 / probe[0] + 0.01, 0.01)
            g2 = np.arange(0.0, 1.0 / probe[1] + 0.01, 0.01)
            pts = np.stack(np.meshgrid(g1, g2), axis=-1).reshape(-1, 2)
            pts = pts[pts @ probe <= 1.0]
            best = u_hat.value_batch(pts).max()
            assert u_hat.value(d.responses[t]) >= best - 1e-6

    def test_length_mismatch_rejected(self, sqrt_dataset_k5):
        cert = AfriatCertificate(np.ones(3), np.ones(3), 0.0)
        with pytest.raises(ValueError):
            reconstruct_utility(cert, sqrt_dataset_k5)


class TestMargin:
    def test_identical_responses_give_zero(self):
        d = ProbeResponseDataset([[1.0, 1.0], [2.0, 0.5]], [[0.5, 0.5], [0.5, 0.5]])
        assert afriat_margin(d, SqrtSumUtility()) == pytest.approx(0.0, abs=1e-12)

    def test_nonnegative_for_concave_utility(self):
        u = SqrtSumUtility()
        for seed in range(5):
            d = sqrt_optimal_dataset(6, 2, seed=seed)
            assert afriat_margin(d, u) >= -1e-12

    def test_two_epoch_hand_computation(self):
        # probes (1,1) and (1,2); responses are the closed-form optima
        u = SqrtSumUtility()
        probes = np.array([[1.0, 1.0], [1.0, 2.0]])
        b1 = naive_response(u, probes[0])
        b2 = naive_response(u, probes[1])
        assert np.allclose(b1, [0.5, 0.5]) and np.allclose(b2, [2 / 3, 1 / 6])
        d = ProbeResponseDataset(probes, np.stack([b1, b2]))

        # independent arithmetic for the two ordered pair terms
        u1 = math.sqrt(0.5) + math.sqrt(0.5)
        u2 = math.sqrt(2 / 3) + math.sqrt(1 / 6)
        g1 = np.array([1 / (2 * math.sqrt(0.5)), 1 / (2 * math.sqrt(0.5))])
        g2 = np.array([1 / (2 * math.sqrt(2 / 3)), 1 / (2 * math.sqrt(1 / 6))])
        term_21 = u1 + g1 @ (b2 - b1) - u2  # anchor t=1, other s=2
        term_12 = u2 + g2 @ (b1 - b2) - u1
        expected = min(term_21, term_12)
        assert expected > 0
        assert afriat_margin(d, u) == pytest.approx(expected, abs=1e-12)

        # cross-check against a dense scan along each budget line: no
        # affordable bundle beats the tangent bound by more than the margin
        for t, (bt, gt, ut) in enumerate(((b1, g1, u1), (b2, g2, u2))):
            probe = d.probes[t]
            xs = np.arange(0.0, 1.0 / probe[0] + 1e-3, 1e-3)
            ys = (1.0 - probe[0] * xs) / probe[1]
            keep = ys >= 0
            pts = np.stack([xs[keep], ys[keep]], axis=1)
            tangent = ut + (pts - bt) @ gt
            assert np.all(tangent - u.value_batch(pts) >= -1e-9)

    def test_single_epoch_margin_is_infinite(self):
        d = ProbeResponseDataset([[1.0, 2.0]], [[0.5, 0.25]])
        assert afriat_margin(d, SqrtSumUtility()) == float("inf")

    def test_gradient_domain_error_propagates(self):
        d = ProbeResponseDataset([[1.0, 1.0], [1.0, 2.0]], [[0.5, 0.0], [0.1, 0.2]])
        with pytest.raises(ValueError):
            afriat_margin(d, SqrtSumUtility())

    def test_custom_anchor_points(self):
        u = SqrtSumUtility()
        d = sqrt_optimal_dataset(4, 2, seed=3)
        anchors = d.responses * 1.5
        got = afriat_margin(d, u, grad_anchors=anchors)
        values = [u.value(b) for b in d.responses]
        grads = [u.gradient(a) for a in anchors]
        expected = min(
            values[t] + grads[t] @ (d.responses[s] - d.responses[t]) - values[s]
            for t in range(4)
            for s in range(4)
            if s != t
        )
        assert got == pytest.approx(expected, abs=1e-12)
