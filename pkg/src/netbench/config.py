"""
Experiment configuration: JSON documents describing a network and a
benchmarking run, with unit-suffixed durations and a stable config hash.
"""

import copy
import hashlib
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .channels import (
    DensityMatrix,
    QuantumChannel,
    amplitude_damping_channel,
    bit_flip_channel,
    bright_state_resource,
    dephasing_channel,
    depolarizing_channel,
    identity_channel,
)
from .cliffords import generate, named_unitary
from .dataset import FlipMode, ShotModel
from .errors import ConfigError, NetbenchError
from .network import (
    ChannelSpec,
    DepolarizingLink,
    ExplicitLink,
    LinkConfig,
    Network,
    NodeConfig,
    TeleportationLink,
)

logger = logging.getLogger(__name__)

DURATION_UNITS = {"ns": 1, "us": 1_000, "µs": 1_000, "ms": 1_000_000, "s": 1_000_000_000}
INFINITE = ("inf", "infinite", "none", "")
_DURATION_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-zµ]*)\s*$")


def parse_duration(value: Union[None, int, float, str]) -> Optional[int]:
    """
    Duration to integer nanoseconds; None for infinite.

    Bare numbers are nanoseconds. Strings take a unit suffix: ``"39us"``,
    ``"12ms"``, ``"3600s"``; ``"inf"`` means infinite.
    """
    if value is None:
        return None
    if isinstance(value, bool):
        raise ConfigError(f"invalid duration {value!r}")
    if isinstance(value, (int, float)):
        if math.isinf(value):
            return None
        if value < 0:
            raise ConfigError(f"negative duration {value!r}")
        return int(round(value))
    text = str(value).strip().lower()
    if text in INFINITE:
        return None
    match = _DURATION_RE.match(text)
    if match is None:
        raise ConfigError(f"cannot parse duration {value!r}")
    number, unit = match.groups()
    unit = unit or "ns"
    if unit not in DURATION_UNITS:
        raise ConfigError(f"unknown time unit {unit!r} in {value!r}")
    return int(round(float(number) * DURATION_UNITS[unit]))


def format_duration(ns: Optional[int]) -> str:
    """Shortest exact unit rendering of a nanosecond count."""
    if ns is None:
        return "inf"
    for unit in ("s", "ms", "us"):
        scale = DURATION_UNITS[unit]
        if ns and ns % scale == 0:
            return f"{ns // scale}{unit}"
    return f"{ns}ns"


def parse_m_list(text: Union[str, List[int]]) -> List[int]:
    """
    Bounce counts from ``"1:20"`` (inclusive, optional ``:step``),
    ``"1,2,4,8"`` or ``"geom:1:256:9"`` (geometric, rounded, deduplicated).
    """
    if isinstance(text, (list, tuple)):
        values = [int(v) for v in text]
    else:
        spec = str(text).strip()
        try:
            if spec.startswith("geom:"):
                start, stop, count = (float(p) for p in spec[5:].split(":"))
                raw = np.geomspace(start, stop, int(count))
                values = sorted({int(round(v)) for v in raw})
            elif ":" in spec:
                parts = [int(p) for p in spec.split(":")]
                if len(parts) not in (2, 3):
                    raise ValueError(spec)
                step = parts[2] if len(parts) == 3 else 1
                if step < 1:
                    raise ValueError(spec)
                values = list(range(parts[0], parts[1] + 1, step))
            else:
                values = [int(p) for p in spec.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse bounce counts {text!r}") from None
    if not values or any(v < 0 for v in values) or len(set(values)) != len(values):
        raise ConfigError(f"bounce counts must be distinct non-negative integers: {text!r}")
    return values


def _complex_matrix(data: Any) -> np.ndarray:
    """Nested lists of reals, or of [re, im] pairs."""
    array = np.asarray(data, dtype=float)
    if array.ndim == 3 and array.shape[-1] == 2:
        return array[..., 0] + 1j * array[..., 1]
    if array.ndim == 2:
        return array.astype(complex)
    raise ConfigError(f"cannot read a matrix of shape {array.shape}")


def build_channel(spec: Optional[Dict[str, Any]], dim: int) -> QuantumChannel:
    """Node or link noise channel from its config entry."""
    if spec is None:
        return identity_channel(dim)
    kind = spec.get("type", "identity")
    try:
        if kind == "identity":
            return identity_channel(dim)
        if kind == "depolarizing":
            return depolarizing_channel(dim, float(spec["f"]))
        if kind == "kraus":
            return QuantumChannel.from_kraus([_complex_matrix(op) for op in spec["ops"]])
        if dim != 2:
            raise ConfigError(f"{kind!r} noise is defined for single qubits only")
        if kind == "bit_flip":
            return bit_flip_channel(float(spec["p"]))
        if kind == "amplitude_damping":
            return amplitude_damping_channel(float(spec["gamma"]))
        if kind == "dephasing":
            return dephasing_channel(float(spec["lambda"]))
    except KeyError as e:
        raise ConfigError(f"{kind!r} channel is missing parameter {e}") from None
    raise ConfigError(f"unknown channel type {kind!r}")


def build_link_spec(spec: Dict[str, Any], dim: int) -> ChannelSpec:
    kind = spec.get("type", "identity")
    if kind == "teleportation":
        if "alpha" in spec:
            return TeleportationLink(bright_state_resource(float(spec["alpha"])))
        if "resource" in spec:
            return TeleportationLink(DensityMatrix(_complex_matrix(spec["resource"])))
        raise ConfigError("teleportation link needs 'alpha' or 'resource'")
    if kind == "depolarizing":
        if "f" not in spec:
            raise ConfigError("depolarizing link needs 'f'")
        return DepolarizingLink(float(spec["f"]))
    return ExplicitLink(build_channel(spec, dim))


def build_node(spec: Dict[str, Any]) -> NodeConfig:
    """NodeConfig from its config entry."""
    if "name" not in spec:
        raise ConfigError(f"node entry without a name: {spec}")
    dim = int(spec.get("dim", 2))
    flip = None
    if "flip_gate" in spec:
        flip = generate(dim.bit_length() - 1).lookup(named_unitary(spec["flip_gate"]))
    return NodeConfig(
        name=spec["name"],
        dim=dim,
        sp_noise=build_channel(spec.get("sp_noise"), dim),
        meas_noise=build_channel(spec.get("meas_noise"), dim),
        gate_noise=build_channel(spec.get("gate_noise"), dim),
        gate_duration=parse_duration(spec.get("gate_duration", 0)) or 0,
        t1=parse_duration(spec.get("t1")),
        t2=parse_duration(spec.get("t2")),
        flip_unitary=flip,
    )


def expand_chain(chain: Dict[str, Any]) -> Dict[str, Any]:
    """Explicit nodes and links of a homogeneous chain template."""
    length = int(chain.get("length", 2))
    if length < 2:
        raise ConfigError(f"a chain needs at least 2 nodes, got {length}")
    prefix = chain.get("prefix", "N")
    names = [f"{prefix}{i + 1}" for i in range(length)]
    node_template = dict(chain.get("node", {}))
    link_template = dict(chain.get("link", {}))
    nodes = [dict(node_template, name=name) for name in names]
    links = []
    for here, there in zip(names, names[1:]):
        links.append(dict(link_template, **{"from": here, "to": there}))
        links.append(dict(link_template, **{"from": there, "to": here}))
    return {"nodes": nodes, "links": links, "path": names}


def build_network(spec: Dict[str, Any]) -> Tuple[Network, List[str]]:
    """
    Network from its config entry.

    Returns:
        The network and its default benchmarking path (chain order, or the
        node order of an explicit network).
    """
    if "chain" in spec:
        spec = expand_chain(spec["chain"])
    try:
        nodes = [build_node(entry) for entry in spec["nodes"]]
        dims = {node.name: node.dim for node in nodes}
        links = []
        for entry in spec.get("links", []):
            source, target = entry["from"], entry["to"]
            channel_spec = build_link_spec(entry.get("channel", {}), dims.get(source, 2))
            links.append(
                LinkConfig(
                    source=source,
                    target=target,
                    channel_spec=channel_spec,
                    transmit_duration=parse_duration(entry.get("transmit_duration", 0)) or 0,
                )
            )
    except KeyError as e:
        raise ConfigError(f"network config is missing {e}") from None
    network = Network(nodes, links)
    return network, list(spec.get("path", [node.name for node in nodes]))


@dataclass
class ProtocolConfig:
    """Benchmarking run parameters."""

    path: List[str] = field(default_factory=list)
    m_values: List[int] = field(default_factory=lambda: list(range(1, 21)))
    sequences: int = 40
    shots: int = 4000
    shot_model: str = ShotModel.GAUSSIAN.value
    flip_mode: str = FlipMode.SHOT.value
    master_seed: int = 0
    jobs: int = 1
    bootstrap: int = 0
    weighted: bool = False

    def __post_init__(self):
        self.m_values = parse_m_list(self.m_values)
        try:
            ShotModel(self.shot_model)
            FlipMode(self.flip_mode)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.sequences < 1 or self.shots < 1 or self.jobs < 1:
            raise ConfigError("sequences, shots and jobs must be positive")
        if self.bootstrap and self.bootstrap < 200:
            raise ConfigError(f"bootstrap needs at least 200 resamples, got {self.bootstrap}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProtocolConfig":
        known = {name for name in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown protocol settings {sorted(unknown)}")
        return cls(**data)


@dataclass
class ExperimentConfig:
    """A network plus the run to perform on it."""

    name: str
    network: Dict[str, Any]
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    out_dir: str = "results"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "network": copy.deepcopy(self.network),
            "protocol": asdict(self.protocol),
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if "network" not in data:
            raise ConfigError("config has no 'network' section")
        return cls(
            name=data.get("name", "experiment"),
            network=copy.deepcopy(data["network"]),
            protocol=ProtocolConfig.from_dict(dict(data.get("protocol", {}))),
            out_dir=data.get("out_dir", "results"),
        )

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from None
        return cls.from_dict(data)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    def config_hash(self) -> str:
        """
        First 16 hex digits of the SHA-256 of the canonical JSON. Settings that
        cannot change results (jobs, output directory) are left out.
        """
        data = self.to_dict()
        data.pop("out_dir")
        data["protocol"].pop("jobs")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @property
    def is_chain(self) -> bool:
        return "chain" in self.network

    def build_network(self) -> Tuple[Network, List[str]]:
        """Resolve, validate and return the network and the path to benchmark."""
        try:
            network, default_path = build_network(self.network)
            network.validate()
        except ConfigError:
            raise
        except NetbenchError as e:
            raise ConfigError(f"invalid network in {self.name!r}: {e}") from e
        path = list(self.protocol.path) or default_path
        network.validate_path(path)
        return network, path

    def with_chain_length(self, length: int) -> "ExperimentConfig":
        """Copy of a chain config with ``length`` nodes, benchmarked end to end."""
        if not self.is_chain:
            raise ConfigError(f"{self.name!r} is not a homogeneous chain config")
        data = self.to_dict()
        data["network"]["chain"]["length"] = length
        data["protocol"]["path"] = []
        return ExperimentConfig.from_dict(data)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with protocol settings (and ``out_dir``) replaced; None values are ignored."""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "out_dir":
                data["out_dir"] = value
            elif key in data["protocol"]:
                data["protocol"][key] = value
            else:
                raise ConfigError(f"unknown override {key!r}")
        return ExperimentConfig.from_dict(data)
