"""
Benchmark scenarios: fitted fidelities of the built-in noise models.
"""

import os
import sys
import unittest

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from netbench.channels import bright_state_resource, depolarizing_channel
from netbench.dataset import ShotModel
from netbench.estimate import bootstrap_ci, fit_decay, fit_log_linear
from netbench.network import LinkConfig, Network, NodeConfig, TeleportationLink
from netbench.presets import load_preset
from netbench.protocol import run_protocol_2node, run_protocol_path


def run_config(config, **overrides):
    config = config.with_overrides(**overrides)
    network, path = config.build_network()
    protocol = config.protocol
    dataset = run_protocol_path(
        network,
        path,
        protocol.m_values,
        protocol.sequences,
        protocol.shots,
        shot_model=protocol.shot_model,
        master_seed=protocol.master_seed,
    )
    return dataset, fit_decay(dataset)


def teleportation_pair(alpha=0.95, node_kwargs=None):
    node_kwargs = node_kwargs or {}
    link = TeleportationLink(bright_state_resource(alpha))
    return Network(
        [NodeConfig("A", **node_kwargs), NodeConfig("B")],
        [LinkConfig("A", "B", link), LinkConfig("B", "A", link)],
    )


class TestTwoNode(unittest.TestCase):
    """Two-node benchmarks."""

    def test_teleportation_only(self):
        dataset = run_protocol_2node(
            teleportation_pair(), "A", "B", range(1, 21), 40, 4000,
            shot_model=ShotModel.GAUSSIAN, master_seed=1,
        )
        fit = fit_decay(dataset)
        self.assertAlmostEqual(fit.f, (29 / 30) ** 2, delta=0.01)

    def test_nv_two_node_preset(self):
        _, fit = run_config(load_preset("nv-2node"))
        self.assertGreaterEqual(fit.f, 0.88)
        self.assertLessEqual(fit.f, 0.92)

    def test_state_preparation_and_measurement_errors_only_change_amplitude(self):
        kwargs = dict(shot_model=ShotModel.GAUSSIAN, master_seed=3)
        clean = run_protocol_2node(teleportation_pair(), "A", "B", range(1, 21), 40, 4000, **kwargs)
        spam = teleportation_pair(
            node_kwargs={
                "sp_noise": depolarizing_channel(2, 0.8),
                "meas_noise": depolarizing_channel(2, 0.8),
            }
        )
        noisy = run_protocol_2node(spam, "A", "B", range(1, 21), 40, 4000, **kwargs)
        clean_fit, noisy_fit = fit_decay(clean), fit_decay(noisy)

        boot = bootstrap_ci(clean, clean_fit, resamples=200, seed=3)
        half_width = 0.5 * (boot.ci_f[1] - boot.ci_f[0])
        self.assertLess(abs(noisy_fit.f - clean_fit.f), half_width)
        self.assertGreater(abs(noisy_fit.A - clean_fit.A) / clean_fit.A, 0.10)
        self.assertAlmostEqual(noisy_fit.A, 0.5 * 0.64, delta=0.02)


class TestMultiNode(unittest.TestCase):
    """Chains of up to six nodes."""

    def test_nv_chain_decays_with_length(self):
        config = load_preset("nv-chain")
        fits = {}
        for k in range(2, 7):
            _, fits[k] = run_config(config.with_chain_length(k))
        values = [fits[k].f for k in range(2, 7)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])), values)
        self.assertGreaterEqual(fits[6].f, 0.50)
        self.assertLessEqual(fits[6].f, 0.62)
        _, _, r2 = fit_log_linear(list(range(2, 7)), values)
        self.assertGreater(r2, 0.99)


if __name__ == "__main__":
    unittest.main()
