"""
Tests for decay fitting, bootstrap intervals and the Fisher-information tools.
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from netbench.channels import bright_state_resource
from netbench.dataset import DecayDataset, FlipMode, SequenceRecord, ShotModel
from netbench.errors import InsufficientDataError, InvalidParameterError, NoSignalError
from netbench.estimate import (
    V_DIFF_BOUND,
    bootstrap_ci,
    crb_cost_bound,
    crb_variance_floor,
    fisher_information,
    fisher_information_per_cost,
    fit_decay,
    fit_decay_data,
    fit_log_linear,
    optimal_bounce_count,
    statistics_report,
    symmetric_link_fidelity,
    variance_decomposition,
)
from netbench.network import DepolarizingLink, LinkConfig, Network, NodeConfig, TeleportationLink
from netbench.protocol import run_protocol_2node

NAN = float("nan")


def synthetic_dataset(m_values, n_sequences, A, f, noise, seed=0):
    """Per-sequence values A f^m plus Gaussian scatter."""
    rng = np.random.default_rng(seed)
    records = []
    for m in m_values:
        for n in range(n_sequences):
            value = A * f**m + (rng.normal(0.0, noise) if noise else 0.0)
            records.append(SequenceRecord(m, n, 0, value, False, NAN, NAN))
    return DecayDataset(
        m_values=tuple(m_values),
        records=tuple(records),
        n_sequences=n_sequences,
        shots=1,
        shot_model=ShotModel.EXACT,
    )


class TestDecayFit(unittest.TestCase):
    """Least-squares fit of A f^m."""

    def test_exact_data(self):
        m = np.arange(1, 21)
        fit = fit_decay_data(m, 0.5 * 0.81**m)
        self.assertAlmostEqual(fit.f, 0.81, delta=1e-9)
        self.assertAlmostEqual(fit.A, 0.5, delta=1e-9)
        self.assertEqual(fit.dof, 18)
        self.assertLess(max(abs(r) for r in fit.residuals), 1e-10)
        self.assertAlmostEqual(fit.average_fidelity(2), 0.905, delta=1e-9)

    def test_noiseless_decay_reaches_unit_fidelity(self):
        fit = fit_decay_data(range(1, 11), [0.5] * 10)
        self.assertAlmostEqual(fit.f, 1.0, delta=1e-9)
        self.assertAlmostEqual(fit.A, 0.5, delta=1e-9)

    def test_noisy_data(self):
        rng = np.random.default_rng(12)
        m = np.arange(1, 21)
        y = 0.5 * 0.9**m + rng.normal(0.0, 0.002, size=m.size)
        fit = fit_decay_data(m, y)
        self.assertLess(abs(fit.f - 0.9), 6 * fit.stderr_f)
        self.assertLess(fit.ci_f[0], fit.f)
        self.assertGreater(fit.ci_f[1], fit.f)
        self.assertTrue(fit.converged)

    def test_negative_means_are_tolerated(self):
        rng = np.random.default_rng(3)
        m = np.arange(1, 16)
        y = 0.5 * 0.5**m + rng.normal(0.0, 0.001, size=m.size)
        self.assertTrue(np.any(y < 0))
        fit = fit_decay_data(m, y)
        self.assertAlmostEqual(fit.f, 0.5, delta=0.02)

    def test_weighted_fit(self):
        dataset = synthetic_dataset(range(1, 11), 10, 0.5, 0.9, 0.01, seed=5)
        fit = fit_decay(dataset, weighted=True)
        self.assertEqual(fit.method, "weighted_least_squares")
        self.assertAlmostEqual(fit.f, 0.9, delta=0.02)

    def test_too_few_bounce_counts(self):
        with self.assertRaises(InsufficientDataError):
            fit_decay_data([1, 2], [0.4, 0.3])
        with self.assertRaises(InsufficientDataError):
            fit_decay_data([1, 1, 2, 2], [0.4, 0.4, 0.3, 0.3])

    def test_no_signal(self):
        with self.assertRaises(NoSignalError):
            fit_decay_data([1, 2, 3], [0.0, 0.0, 0.0])
        with self.assertRaises(NoSignalError):
            fit_decay_data([1, 2, 3], [-0.1, -0.2, -0.05])

    def test_mismatched_lengths(self):
        with self.assertRaises(InvalidParameterError):
            fit_decay_data([1, 2, 3], [0.4, 0.3])

    def test_result_dict(self):
        fit = fit_decay_data([1, 2, 3, 4], [0.45, 0.405, 0.3645, 0.32805])
        data = fit.to_dict()
        self.assertEqual(data["ci_method"], "student-t")
        self.assertEqual(len(data["ci_f"]), 2)
        self.assertEqual(data["m_values"], [1, 2, 3, 4])


class TestBootstrap(unittest.TestCase):
    """Studentized bootstrap intervals."""

    def setUp(self):
        self.dataset = synthetic_dataset(range(1, 11), 10, 0.5, 0.9, 0.02, seed=8)
        self.fit = fit_decay(self.dataset)

    def test_interval_brackets_estimate(self):
        boot = bootstrap_ci(self.dataset, self.fit, resamples=200, seed=1)
        self.assertLessEqual(boot.ci_f[0], self.fit.f)
        self.assertGreaterEqual(boot.ci_f[1], self.fit.f)
        self.assertLess(boot.ci_A[0], boot.ci_A[1])
        self.assertEqual(boot.resamples, 200)
        self.assertEqual(boot.failed, 0)

    def test_reproducible(self):
        first = bootstrap_ci(self.dataset, self.fit, resamples=200, seed=4)
        second = bootstrap_ci(self.dataset, self.fit, resamples=200, seed=4)
        self.assertEqual(first, second)

    def test_parallel_refits_match(self):
        serial = bootstrap_ci(self.dataset, self.fit, resamples=200, seed=4)
        parallel = bootstrap_ci(self.dataset, self.fit, resamples=200, seed=4, jobs=2)
        np.testing.assert_allclose(serial.ci_f, parallel.ci_f, rtol=1e-12)

    def test_zero_spread_gives_zero_width(self):
        dataset = synthetic_dataset(range(1, 11), 6, 0.5, 0.9, 0.0)
        fit = fit_decay(dataset)
        boot = bootstrap_ci(dataset, fit, resamples=200)
        self.assertLess(boot.ci_f[1] - boot.ci_f[0], 1e-9)

    def test_requirements(self):
        with self.assertRaises(InvalidParameterError):
            bootstrap_ci(self.dataset, self.fit, resamples=100)
        short = synthetic_dataset(range(1, 11), 4, 0.5, 0.9, 0.02)
        with self.assertRaises(InsufficientDataError):
            bootstrap_ci(short, fit_decay(short), resamples=200)

    @pytest.mark.slow
    def test_coverage(self):
        covered = 0
        trials = 500
        for trial in range(trials):
            dataset = synthetic_dataset(range(1, 11), 20, 0.5, 0.9, 0.05, seed=1000 + trial)
            fit = fit_decay(dataset)
            boot = bootstrap_ci(dataset, fit, resamples=200, seed=trial)
            covered += boot.ci_f[0] <= 0.9 <= boot.ci_f[1]
        self.assertGreaterEqual(covered / trials, 0.92)
        self.assertLessEqual(covered / trials, 0.98)


class TestFidelityConversions(unittest.TestCase):
    """Two-direction splitting of the bounce fidelity."""

    def test_symmetric_link_fidelity(self):
        f_link, F_link = symmetric_link_fidelity((29 / 30) ** 2)
        self.assertAlmostEqual(f_link, 29 / 30, places=12)
        self.assertAlmostEqual(F_link, 0.9833333333333333, places=12)
        f_link, _ = symmetric_link_fidelity(0.93444)
        self.assertAlmostEqual(f_link, 0.96667, delta=1e-5)

    def test_invalid_fidelity(self):
        with self.assertRaises(InvalidParameterError):
            symmetric_link_fidelity(0.0)
        with self.assertRaises(InvalidParameterError):
            symmetric_link_fidelity(1.5)


class TestFisherInformation(unittest.TestCase):
    """Fisher information and the Cramér-Rao cost bound."""

    def test_values(self):
        self.assertAlmostEqual(fisher_information(0.9, 1, 0.5), 2.0)
        self.assertAlmostEqual(fisher_information(0.9, 5, 0.5), 50 * 0.9**8)
        self.assertAlmostEqual(fisher_information(0.9, 5, 1.0), 4 * fisher_information(0.9, 5, 0.5))
        curve = fisher_information_per_cost(0.9, np.arange(1, 4), 0.5)
        np.testing.assert_allclose(curve, [2.0, 2 * 0.81 * 2, 2 * 0.9**4 * 3])

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidParameterError):
            fisher_information(0.0, 1, 0.5)
        with self.assertRaises(InvalidParameterError):
            fisher_information(1.1, 1, 0.5)
        with self.assertRaises(InvalidParameterError):
            fisher_information(0.9, 0, 0.5)
        with self.assertRaises(InvalidParameterError):
            fisher_information(0.9, 1, 0.5, V=0.0)

    def test_optimal_bounce_count(self):
        self.assertAlmostEqual(optimal_bounce_count(0.9), 4.7456, delta=1e-4)
        self.assertAlmostEqual(optimal_bounce_count(0.99), 49.749, delta=1e-3)
        for f in (1.0, 0.0, 1.2):
            with self.assertRaises(InvalidParameterError):
                optimal_bounce_count(f)

    def test_grid_optimum_is_near_continuous_optimum(self):
        for f in (0.5, 0.8, 0.9, 0.95, 0.99):
            report = statistics_report(f, 0.5)
            self.assertLessEqual(abs(report.m_star - optimal_bounce_count(f)), 1.0)
        self.assertEqual(statistics_report(0.9).m_star, 5)

    def test_cost_bound_scaling(self):
        self.assertAlmostEqual(crb_cost_bound(0.9, 1.0) / crb_cost_bound(0.9, 0.5), 4.0)
        self.assertAlmostEqual(crb_variance_floor(0.9, 0.5), 1.0 / crb_cost_bound(0.9, 0.5))
        rates = np.array([0.1, 0.01, 0.001])
        floors = [crb_variance_floor(1 - r, 0.5) for r in rates]
        slope = np.polyfit(np.log(rates), np.log(floors), 1)[0]
        self.assertAlmostEqual(slope, 1.0, delta=0.05)

    def test_report_contents(self):
        report = statistics_report(0.9, 0.5, m_grid=range(1, 11))
        self.assertEqual(report.m_grid, tuple(range(1, 11)))
        self.assertEqual(len(report.rows()), 10)
        self.assertAlmostEqual(report.V, V_DIFF_BOUND)
        data = report.to_dict()
        self.assertEqual(len(data["curve"]), 10)
        self.assertNotIn("variance_components", data)
        # Default grid extends past four times the optimum.
        self.assertEqual(statistics_report(0.99).m_grid[-1], math.ceil(4 * optimal_bounce_count(0.99)))

    def test_report_needs_positive_grid(self):
        for grid in (range(1, -2), [0, 1, 2]):
            with self.assertRaises(InvalidParameterError):
                statistics_report(0.9, m_grid=grid)

    def test_log_linear_fit(self):
        k = np.arange(2, 7)
        slope, intercept, r2 = fit_log_linear(k, 0.95 ** (2 * (k - 1)))
        self.assertAlmostEqual(slope, 2 * math.log(0.95), places=12)
        self.assertAlmostEqual(r2, 1.0, places=12)
        with self.assertRaises(InsufficientDataError):
            fit_log_linear([1], [0.5])


class TestVarianceDecomposition(unittest.TestCase):
    """Variance components of the per-sequence values."""

    def _pair(self, forward, backward):
        return Network(
            [NodeConfig("A"), NodeConfig("B")],
            [LinkConfig("A", "B", forward), LinkConfig("B", "A", backward)],
        )

    def test_noiseless_flip_term(self):
        network = self._pair(DepolarizingLink(1.0), DepolarizingLink(1.0))
        dataset = run_protocol_2node(
            network, "A", "B", [1, 2], 400, 1,
            shot_model=ShotModel.EXACT, flip_mode=FlipMode.SEQUENCE, master_seed=5,
        )
        components = variance_decomposition(dataset)
        np.testing.assert_allclose(components.v_diff, V_DIFF_BOUND, atol=1e-12)
        np.testing.assert_allclose(components.v_gate, 0.0, atol=1e-12)
        np.testing.assert_allclose(components.v_meas, 0.0, atol=1e-12)
        # One coin per sequence: values 1 and 0, spread 1/4.
        self.assertEqual(components.flip_weight, 2.0)
        np.testing.assert_allclose(components.v_total, components.v_sum, rtol=0.05)

    def test_noiseless_shot_split(self):
        network = self._pair(DepolarizingLink(1.0), DepolarizingLink(1.0))
        dataset = run_protocol_2node(
            network, "A", "B", [1, 2], 20, 1, shot_model=ShotModel.EXACT, master_seed=5
        )
        components = variance_decomposition(dataset)
        np.testing.assert_allclose(components.v_diff, V_DIFF_BOUND, atol=1e-12)
        self.assertEqual(components.flip_weight, 0.0)
        np.testing.assert_allclose(components.v_total, 0.0, atol=1e-12)
        np.testing.assert_allclose(components.v_sum, 0.0, atol=1e-12)

    def test_flip_term_within_default_variance(self):
        link = TeleportationLink(bright_state_resource(0.9))
        network = self._pair(link, link)
        for mode in FlipMode:
            dataset = run_protocol_2node(
                network, "A", "B", [1, 4], 30, 1,
                shot_model=ShotModel.EXACT, flip_mode=mode, master_seed=2,
            )
            components = variance_decomposition(dataset)
            self.assertTrue(all(v <= V_DIFF_BOUND + 1e-12 for v in components.v_diff))
            self.assertEqual(components.to_dict()["flip_weight"], components.flip_weight)

    def test_shot_flip_has_no_flip_term(self):
        network = self._pair(DepolarizingLink(0.9), DepolarizingLink(0.9))
        dataset = run_protocol_2node(network, "A", "B", [1, 2], 10, 1000, master_seed=5)
        components = variance_decomposition(dataset)
        np.testing.assert_allclose(components.v_diff, V_DIFF_BOUND, atol=1e-12)
        self.assertEqual(components.flip_weight, 0.0)
        self.assertEqual(components.v_sum, tuple(g + s for g, s in zip(components.v_gate, components.v_meas)))
        self.assertTrue(all(v > 0 for v in components.v_meas))
        report = statistics_report(0.81, dataset=dataset)
        self.assertEqual(report.variance_components, components)

    def test_needs_branch_probabilities(self):
        with self.assertRaises(InsufficientDataError):
            variance_decomposition(synthetic_dataset([1, 2, 3], 5, 0.5, 0.9, 0.01))

    def test_needs_two_sequences(self):
        network = self._pair(DepolarizingLink(0.9), DepolarizingLink(0.9))
        dataset = run_protocol_2node(network, "A", "B", [1], 1, 100)
        with self.assertRaises(InsufficientDataError):
            variance_decomposition(dataset)

    @pytest.mark.slow
    def test_components_add_up(self):
        link = TeleportationLink(bright_state_resource(0.9))
        network = self._pair(link, link)
        dataset = run_protocol_2node(
            network, "A", "B", [2], 20_000, 100,
            shot_model=ShotModel.BINOMIAL, flip_mode=FlipMode.SEQUENCE, master_seed=8,
        )
        components = variance_decomposition(dataset)
        self.assertGreater(components.v_gate[0], 0.0)
        self.assertAlmostEqual(components.v_total[0] / components.v_sum[0], 1.0, delta=0.05)


if __name__ == "__main__":
    unittest.main()
