"""
Tests for the bounce protocol: sequences, shot noise and full runs.
"""

import os
import sys
import unittest

import numpy as np

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from netbench.channels import bright_state_resource, depolarizing_channel
from netbench.cliffords import generate
from netbench.dataset import FlipMode, ShotModel
from netbench.errors import InvalidParameterError, InvariantViolationError, TopologyError
from netbench.estimate import fit_decay
from netbench.network import (
    DepolarizingLink,
    LinkConfig,
    Network,
    NodeConfig,
    TeleportationLink,
    chain_network,
)
from netbench.protocol import (
    SequenceSpec,
    apply_shot_noise,
    derive_seed,
    evaluate_branches,
    run_protocol_2node,
    run_protocol_multinode,
    run_sequence_2node,
    sample_sequence_value,
    split_shots,
)


def depolarizing_pair(f: float = 1.0) -> Network:
    return Network(
        [NodeConfig("A"), NodeConfig("B")],
        [LinkConfig("A", "B", DepolarizingLink(f)), LinkConfig("B", "A", DepolarizingLink(f))],
    )


def depolarizing_chain(length: int, f: float):
    return chain_network(
        length, lambda name: NodeConfig(name), lambda s, t: LinkConfig(s, t, DepolarizingLink(f))
    )


def drawn(m: int, hops: int, seed: int, flip: bool = None) -> SequenceSpec:
    spec = SequenceSpec.draw(m, hops, 24, seed)
    if flip is None:
        return spec
    return SequenceSpec(spec.m, spec.gate_indices, flip, spec.seed)


class TestSequenceSpec(unittest.TestCase):
    """Random sequence choices."""

    def test_draw_is_reproducible(self):
        self.assertEqual(SequenceSpec.draw(5, 2, 24, seed=3), SequenceSpec.draw(5, 2, 24, seed=3))
        self.assertNotEqual(
            SequenceSpec.draw(5, 2, 24, seed=3).gate_indices,
            SequenceSpec.draw(5, 2, 24, seed=4).gate_indices,
        )

    def test_gate_count(self):
        spec = SequenceSpec.draw(3, 4, 24, seed=0)
        self.assertEqual(spec.gate_count, 12)
        spec.validate(3)
        with self.assertRaises(InvariantViolationError):
            spec.validate(2)

    def test_dict_form(self):
        spec = SequenceSpec.draw(2, 2, 24, seed=8)
        self.assertEqual(SequenceSpec.from_dict(spec.to_dict()), spec)

    def test_negative_bounce_count(self):
        with self.assertRaises(InvalidParameterError):
            SequenceSpec.draw(-1, 2, 24, seed=0)

    def test_seeds_are_distinct(self):
        seeds = {derive_seed(1, m, n) for m in range(1, 21) for n in range(40)}
        self.assertEqual(len(seeds), 800)
        self.assertEqual(derive_seed(1, 3, 5), derive_seed(1, 3, 5))
        self.assertNotEqual(derive_seed(1, 3, 5), derive_seed(2, 3, 5))


class TestSequences(unittest.TestCase):
    """Exact evaluation of single sequences."""

    def test_noiseless_sequence(self):
        network = depolarizing_pair(1.0)
        for seed in range(10):
            p_plus, p_minus = evaluate_branches(network, ["A", "B"], drawn(5, 2, seed))
            self.assertAlmostEqual(p_plus, 1.0, places=12)
            self.assertAlmostEqual(p_minus, 0.0, places=12)
        self.assertAlmostEqual(run_sequence_2node(network, "A", "B", drawn(5, 2, 1, flip=False)), 1.0)
        self.assertAlmostEqual(run_sequence_2node(network, "A", "B", drawn(5, 2, 1, flip=True)), 0.0)

    def test_zero_bounces(self):
        network = depolarizing_pair(0.9)
        spec = SequenceSpec(m=0, gate_indices=(), flip_chosen=False, seed=0)
        p_plus, p_minus = evaluate_branches(network, ["A", "B"], spec)
        self.assertAlmostEqual(0.5 * (p_plus - p_minus), 0.5, places=12)

    def test_single_bounce_depolarizing(self):
        p_plus, p_minus = evaluate_branches(depolarizing_pair(0.9), ["A", "B"], drawn(1, 2, 6))
        self.assertAlmostEqual(0.5 * (p_plus - p_minus), 0.5 * 0.81, places=12)

    def test_three_node_path(self):
        network, path = depolarizing_chain(3, 0.95)
        for m in range(1, 6):
            p_plus, p_minus = evaluate_branches(network, path, drawn(m, 4, m))
            self.assertAlmostEqual(0.5 * (p_plus - p_minus), 0.5 * 0.95 ** (4 * m), places=10)

    def test_gate_noise_counts_per_gate(self):
        network = Network(
            [NodeConfig("A", gate_noise=depolarizing_channel(2, 0.99)), NodeConfig("B")],
            [LinkConfig("A", "B", DepolarizingLink(1.0)), LinkConfig("B", "A", DepolarizingLink(1.0))],
        )
        # One gate at A per bounce plus the ending gate.
        p_plus, p_minus = evaluate_branches(network, ["A", "B"], drawn(4, 2, 2))
        self.assertAlmostEqual(0.5 * (p_plus - p_minus), 0.5 * 0.99**5, places=10)

    def test_missing_link_is_reported(self):
        network = Network(
            [NodeConfig("A"), NodeConfig("B")], [LinkConfig("A", "B", DepolarizingLink(0.9))]
        )
        with self.assertRaises(TopologyError):
            evaluate_branches(network, ["A", "B"], drawn(1, 2, 0))

    def test_evaluation_does_not_touch_network_clock(self):
        network = Network(
            [NodeConfig("A", gate_duration=39_000), NodeConfig("B", gate_duration=39_000)],
            [LinkConfig("A", "B", DepolarizingLink(1.0)), LinkConfig("B", "A", DepolarizingLink(1.0))],
        )
        evaluate_branches(network, ["A", "B"], drawn(3, 2, 0))
        self.assertEqual(network.clock, 0)


class TestShotNoise(unittest.TestCase):
    """Finite-shot models."""

    def test_exact(self):
        rng = np.random.default_rng(0)
        self.assertEqual(apply_shot_noise(0.3, 10, ShotModel.EXACT, rng), 0.3)
        self.assertEqual(apply_shot_noise(-0.3, 10, "exact", rng), -0.3)

    def test_gaussian_statistics(self):
        rng = np.random.default_rng(5)
        samples = np.array([apply_shot_noise(0.3, 100, "gaussian", rng) for _ in range(20_000)])
        self.assertAlmostEqual(samples.mean(), 0.3, delta=0.002)
        self.assertAlmostEqual(samples.var(), 0.3 * 0.7 / 100, delta=0.0002)

    def test_sign_and_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            value = apply_shot_noise(-0.02, 10, ShotModel.GAUSSIAN, rng)
            self.assertLessEqual(value, 0.0)
            self.assertGreaterEqual(value, -1.0)
        self.assertEqual(apply_shot_noise(1.0, 50, ShotModel.GAUSSIAN, rng), 1.0)

    def test_binomial_counts(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            value = apply_shot_noise(0.3, 1000, ShotModel.BINOMIAL, rng)
            self.assertAlmostEqual(value * 1000, round(value * 1000), places=9)

    def test_invalid_arguments(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(InvalidParameterError):
            apply_shot_noise(0.5, 0, ShotModel.GAUSSIAN, rng)
        with self.assertRaises(InvalidParameterError):
            apply_shot_noise(1.5, 10, ShotModel.GAUSSIAN, rng)
        with self.assertRaises(ValueError):
            apply_shot_noise(0.5, 10, "poisson", rng)

    def test_split_shots(self):
        self.assertEqual(split_shots(4000), (2000, 2000))
        self.assertEqual(split_shots(5), (3, 2))
        self.assertEqual(split_shots(1), (1, 1))

    def test_shot_split_ignores_the_coin(self):
        values = [
            sample_sequence_value(
                0.8, 0.15, flip, 400, ShotModel.BINOMIAL, FlipMode.SHOT, np.random.default_rng(3)
            )
            for flip in (False, True)
        ]
        self.assertEqual(values[0], values[1])
        # Half the difference of a 200-shot plain mean and a 200-shot flipped mean.
        self.assertAlmostEqual(values[0] * 400, round(values[0] * 400), places=9)

    def test_sequence_value_modes(self):
        rng = np.random.default_rng(0)
        shot = sample_sequence_value(0.9, 0.1, True, 100, ShotModel.EXACT, FlipMode.SHOT, rng)
        self.assertAlmostEqual(shot, 0.4)
        per_sequence = sample_sequence_value(
            0.9, 0.1, True, 100, ShotModel.EXACT, FlipMode.SEQUENCE, rng
        )
        self.assertAlmostEqual(per_sequence, -0.1)


class TestProtocolRuns(unittest.TestCase):
    """Complete runs over many sequences."""

    def test_exact_run_matches_closed_form(self):
        m_values = list(range(1, 21))
        dataset = run_protocol_2node(
            depolarizing_pair(0.9), "A", "B", m_values, 5, 1,
            shot_model=ShotModel.EXACT, master_seed=3,
        )
        expected = 0.5 * 0.81 ** np.array(m_values)
        np.testing.assert_allclose(dataset.means, expected, atol=1e-10)
        for record in dataset.records:
            self.assertAlmostEqual(record.b_value, 0.5 * 0.81**record.m, delta=1e-10)
        fit = fit_decay(dataset)
        self.assertAlmostEqual(fit.f, 0.81, delta=1e-9)
        self.assertAlmostEqual(fit.A, 0.5, delta=1e-9)

    def test_noiseless_run(self):
        dataset = run_protocol_2node(depolarizing_pair(1.0), "A", "B", [1, 2, 3], 4, 4000)
        np.testing.assert_allclose(dataset.means, 0.5, atol=1e-6)

    def test_two_node_path_matches_two_node_run(self):
        network = depolarizing_pair(0.9)
        kwargs = dict(m_values=[1, 2, 3], n_sequences=3, shots=100, master_seed=9)
        pair = run_protocol_2node(network, "A", "B", **kwargs)
        path = run_protocol_multinode(network, ["A", "B"], **kwargs)
        self.assertEqual(pair.records, path.records)

    def test_chain_run(self):
        network, path = depolarizing_chain(4, 0.95)
        dataset = run_protocol_multinode(
            network, path, [1, 2, 3], 2, 1, shot_model=ShotModel.EXACT
        )
        np.testing.assert_allclose(dataset.means, 0.5 * 0.95 ** (6 * np.array([1, 2, 3])), atol=1e-10)

    def test_runs_are_reproducible(self):
        network = Network(
            [NodeConfig("A", t2=12_000_000, gate_duration=39_000), NodeConfig("B")],
            [
                LinkConfig("A", "B", TeleportationLink(bright_state_resource(0.95)), 312_000),
                LinkConfig("B", "A", DepolarizingLink(0.97)),
            ],
        )
        first = run_protocol_2node(network, "A", "B", [1, 4], 3, 500, master_seed=21)
        second = run_protocol_2node(network, "A", "B", [1, 4], 3, 500, master_seed=21)
        other = run_protocol_2node(network, "A", "B", [1, 4], 3, 500, master_seed=22)
        self.assertEqual(first.records, second.records)
        self.assertNotEqual(first.records, other.records)

    def test_records_follow_seeds(self):
        dataset = run_protocol_2node(depolarizing_pair(0.9), "A", "B", [2, 1], 3, 10, master_seed=4)
        self.assertEqual(dataset.m_values, (2, 1))
        self.assertEqual(
            [(r.m, r.sequence_index) for r in dataset.records],
            [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)],
        )
        for record in dataset.records:
            self.assertEqual(record.seed, derive_seed(4, record.m, record.sequence_index))

    def test_sequence_flip_mode(self):
        dataset = run_protocol_2node(
            depolarizing_pair(1.0), "A", "B", [1], 400, 1,
            shot_model=ShotModel.EXACT, flip_mode=FlipMode.SEQUENCE, master_seed=2,
        )
        values = np.array([r.b_value for r in dataset.records])
        flips = np.array([r.flip_chosen for r in dataset.records])
        np.testing.assert_allclose(values[~flips], 1.0, atol=1e-12)
        np.testing.assert_allclose(values[flips], 0.0, atol=1e-12)
        self.assertAlmostEqual(values.mean(), 0.5, delta=0.1)

    def test_invalid_runs(self):
        network = depolarizing_pair(0.9)
        with self.assertRaises(InvalidParameterError):
            run_protocol_2node(network, "A", "B", [1, 1], 2, 10)
        with self.assertRaises(InvalidParameterError):
            run_protocol_2node(network, "A", "B", [1], 0, 10)
        with self.assertRaises(InvalidParameterError):
            run_protocol_2node(network, "A", "B", [1], 2, 0)

    def test_two_qubit_registers(self):
        network = Network(
            [NodeConfig("A", dim=4), NodeConfig("B", dim=4)],
            [LinkConfig("A", "B", DepolarizingLink(0.9)), LinkConfig("B", "A", DepolarizingLink(0.9))],
        )
        group = generate(2)
        dataset = run_protocol_2node(
            network, "A", "B", [1, 2], 2, 1, shot_model=ShotModel.EXACT, group=group
        )
        # Register fidelity of two-qubit depolarizing links; the flip maps |00> to |11>.
        np.testing.assert_allclose(dataset.means, 0.5 * 0.81 ** np.array([1, 2]), atol=1e-10)


if __name__ == "__main__":
    unittest.main()
