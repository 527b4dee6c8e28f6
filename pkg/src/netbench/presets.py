"""
Built-in experiment configurations.
"""

import copy
from typing import Any, Dict, List

from .config import ExperimentConfig
from .errors import ConfigError

# Trapped-qubit style node: slow relaxation, 12 ms dephasing, 39 us per gate.
_NV_NODE = {"t1": "3600s", "t2": "12ms", "gate_duration": "39us"}

# Teleportation through a bright-state resource with alpha = 0.95; the qubit
# waits for eight gate times while the Bell measurement and correction run.
_NV_LINK = {
    "channel": {"type": "teleportation", "alpha": 0.95},
    "transmit_duration": "312us",
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "noiseless": {
        "name": "noiseless",
        "network": {
            "nodes": [{"name": "A"}, {"name": "B"}],
            "links": [
                {"from": "A", "to": "B", "channel": {"type": "identity"}},
                {"from": "B", "to": "A", "channel": {"type": "identity"}},
            ],
        },
        "protocol": {
            "m_values": "1:20",
            "sequences": 40,
            "shots": 4000,
            "shot_model": "gaussian",
            "master_seed": 1,
        },
    },
    "depol-0.81": {
        "name": "depol-0.81",
        "network": {
            "nodes": [{"name": "A"}, {"name": "B"}],
            "links": [
                {"from": "A", "to": "B", "channel": {"type": "depolarizing", "f": 0.9}},
                {"from": "B", "to": "A", "channel": {"type": "depolarizing", "f": 0.9}},
            ],
        },
        "protocol": {
            "m_values": "1:20",
            "sequences": 40,
            "shots": 4000,
            "shot_model": "gaussian",
            "master_seed": 1,
        },
    },
    "nv-2node": {
        "name": "nv-2node",
        "network": {
            "chain": {"length": 2, "prefix": "N", "node": _NV_NODE, "link": _NV_LINK},
        },
        "protocol": {
            "m_values": "1:20",
            "sequences": 40,
            "shots": 4000,
            "shot_model": "gaussian",
            "master_seed": 1,
        },
    },
    "nv-chain": {
        "name": "nv-chain",
        "network": {
            "chain": {"length": 6, "prefix": "N", "node": _NV_NODE, "link": _NV_LINK},
        },
        "protocol": {
            "m_values": "1:9",
            "sequences": 40,
            "shots": 4000,
            "shot_model": "gaussian",
            "master_seed": 1,
        },
    },
}

DESCRIPTIONS = {
    "noiseless": "two perfect nodes and links (f = 1, A = 0.5)",
    "depol-0.81": "two perfect nodes, depolarizing links f = 0.9 each way (f = 0.81)",
    "nv-2node": "teleportation links (alpha = 0.95), T2 = 12 ms, 39 us gates",
    "nv-chain": "nv-2node noise on a chain of up to six nodes, m = 1..9",
}


# Alternative names accepted wherever a preset name is.
ALIASES = {
    "paper-2node": "nv-2node",
    "paper-multinode": "nv-chain",
}


def preset_names(include_aliases: bool = False) -> List[str]:
    names = set(PRESETS)
    if include_aliases:
        names.update(ALIASES)
    return sorted(names)


def load_preset(name: str) -> ExperimentConfig:
    try:
        data = PRESETS[ALIASES.get(name, name)]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {preset_names(include_aliases=True)}"
        ) from None
    return ExperimentConfig.from_dict(copy.deepcopy(data))
