"""
Network model: noisy nodes, directed noisy links and a logical clock.

A node holds one register of dimension d. Gates are followed by the node's
gate-independent noise and by memory decoherence for the gate duration.
Links are directed; the two directions of an edge are configured
independently. Times are integer nanoseconds.
"""

import copy
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .channels import (
    DensityMatrix,
    Effect,
    QuantumChannel,
    apply,
    compose,
    compose_all,
    decoherence_channel,
    depolarizing_channel,
    depolarizing_fidelity,
    identity_channel,
    teleportation_channel,
)
from .cliffords import CliffordElement, generate, named_unitary
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    InvariantViolationError,
    TopologyError,
)

logger = logging.getLogger(__name__)

ORTHOGONALITY_ATOL = 1e-10
PROBABILITY_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class NodeConfig:
    """
    A network node.

    Channels left as None default to the identity; the initial state defaults
    to |0...0>, the effect to its projector and the flip gate to X on every
    qubit.
    """

    name: str
    dim: int = 2
    sp_noise: Optional[QuantumChannel] = None
    meas_noise: Optional[QuantumChannel] = None
    gate_noise: Optional[QuantumChannel] = None
    gate_duration: int = 0
    t1: Optional[int] = None
    t2: Optional[int] = None
    initial_state: Optional[DensityMatrix] = None
    effect: Optional[Effect] = None
    flip_unitary: Optional[CliffordElement] = None

    def __post_init__(self):
        if self.dim not in (2, 4):
            raise InvalidParameterError(
                f"node {self.name!r}: registers of 1 or 2 qubits are supported, got dim {self.dim}"
            )
        if self.gate_duration < 0:
            raise InvalidParameterError(f"node {self.name!r}: negative gate duration")
        defaults = {
            "sp_noise": lambda: identity_channel(self.dim),
            "meas_noise": lambda: identity_channel(self.dim),
            "gate_noise": lambda: identity_channel(self.dim),
            "initial_state": lambda: DensityMatrix.basis(self.dim, 0),
            "effect": lambda: Effect.projector(self.dim, 0),
            "flip_unitary": lambda: generate(self.n_qubits).lookup(
                named_unitary("X" * self.n_qubits)
            ),
        }
        for attribute, make in defaults.items():
            if getattr(self, attribute) is None:
                object.__setattr__(self, attribute, make())
        for attribute in ("sp_noise", "meas_noise", "gate_noise", "initial_state", "effect"):
            value = getattr(self, attribute)
            if value.dim != self.dim:
                raise DimensionMismatchError(
                    f"node {self.name!r}: {attribute} has dim {value.dim}, node has {self.dim}"
                )
        if self.flip_unitary.dim != self.dim:
            raise DimensionMismatchError(f"node {self.name!r}: flip gate has the wrong dimension")
        # Raises on T2 > 2 T1.
        decoherence_channel(0, self.t1, self.t2)

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def memory_channel(self, duration: int) -> QuantumChannel:
        """Decoherence of the register stored for ``duration`` ns."""
        return decoherence_channel(duration, self.t1, self.t2, self.n_qubits)

    @cached_property
    def post_gate_channel(self) -> QuantumChannel:
        """Gate noise followed by decoherence over one gate duration."""
        return compose(self.memory_channel(self.gate_duration), self.gate_noise)

    def validate(self) -> "NodeConfig":
        for channel in (self.sp_noise, self.meas_noise, self.gate_noise):
            channel.validate()
        self.initial_state.validate()
        self.effect.validate()
        p = self.flip_unitary.unitary
        rho = self.initial_state.matrix
        overlap = float(np.real(np.trace(p @ rho @ p.conj().T @ rho)))
        if overlap >= ORTHOGONALITY_ATOL:
            raise InvariantViolationError(
                f"node {self.name!r}: flip gate does not map the initial state to an "
                f"orthogonal state (overlap {overlap:.3e})"
            )
        return self


@dataclass(frozen=True)
class ExplicitLink:
    """Link noise given directly as a channel."""

    channel: QuantumChannel

    def resolve(self, dim: int) -> QuantumChannel:
        return self.channel


@dataclass(frozen=True, eq=False)
class TeleportationLink:
    """Qubit teleported through a shared two-qubit resource state."""

    resource: DensityMatrix

    def resolve(self, dim: int) -> QuantumChannel:
        if dim != 2:
            raise InvalidParameterError("teleportation links carry single qubits only")
        return teleportation_channel(self.resource)


@dataclass(frozen=True)
class DepolarizingLink:
    f: float

    def resolve(self, dim: int) -> QuantumChannel:
        return depolarizing_channel(dim, self.f)


ChannelSpec = Union[ExplicitLink, TeleportationLink, DepolarizingLink]


@dataclass(frozen=True)
class LinkConfig:
    """Directed link ``source -> target``."""

    source: str
    target: str
    channel_spec: ChannelSpec
    transmit_duration: int = 0

    def __post_init__(self):
        if self.transmit_duration < 0:
            raise InvalidParameterError(
                f"link {self.source}->{self.target}: negative transmit duration"
            )

    @property
    def key(self) -> Tuple[str, str]:
        return (self.source, self.target)


class Network:
    """
    Nodes plus directed links, with link channels resolved once.

    Simulation calls advance ``clock``; use ``fork`` to obtain a private copy
    for each sequence.
    """

    def __init__(self, nodes: Iterable[NodeConfig], links: Iterable[LinkConfig]):
        self.nodes: Dict[str, NodeConfig] = {}
        for node in nodes:
            if node.name in self.nodes:
                raise TopologyError(f"duplicate node {node.name!r}")
            self.nodes[node.name] = node

        self.links: Dict[Tuple[str, str], LinkConfig] = {}
        self._link_channels: Dict[Tuple[str, str], QuantumChannel] = {}
        self._transmit_channels: Dict[Tuple[str, str], QuantumChannel] = {}
        for link in links:
            if link.key in self.links:
                raise TopologyError(f"duplicate link {link.source}->{link.target}")
            for endpoint in link.key:
                if endpoint not in self.nodes:
                    raise TopologyError(
                        f"link {link.source}->{link.target} refers to unknown node {endpoint!r}"
                    )
            sender, receiver = self.nodes[link.source], self.nodes[link.target]
            if sender.dim != receiver.dim:
                raise DimensionMismatchError(
                    f"link {link.source}->{link.target} joins nodes of dim {sender.dim} and {receiver.dim}"
                )
            channel = link.channel_spec.resolve(sender.dim)
            if channel.dim != sender.dim:
                raise DimensionMismatchError(
                    f"link {link.source}->{link.target}: channel dim {channel.dim} != node dim {sender.dim}"
                )
            self.links[link.key] = link
            self._link_channels[link.key] = channel
            waiting = sender.memory_channel(link.transmit_duration)
            self._transmit_channels[link.key] = compose(channel, waiting)

        self.clock = 0
        logger.debug(f"Network with {len(self.nodes)} nodes and {len(self.links)} links")

    def fork(self) -> "Network":
        """Shallow copy sharing configuration, with its own clock at zero."""
        twin = copy.copy(self)
        twin.clock = 0
        return twin

    def node(self, name: str) -> NodeConfig:
        try:
            return self.nodes[name]
        except KeyError:
            raise TopologyError(f"unknown node {name!r}") from None

    def link(self, source: str, target: str) -> LinkConfig:
        try:
            return self.links[(source, target)]
        except KeyError:
            raise TopologyError(f"no link {source}->{target}") from None

    def link_channel(self, source: str, target: str) -> QuantumChannel:
        self.link(source, target)
        return self._link_channels[(source, target)]

    def transmit_channel(self, source: str, target: str) -> QuantumChannel:
        """Sender-side waiting decoherence followed by the link channel."""
        self.link(source, target)
        return self._transmit_channels[(source, target)]

    def validate(self) -> "Network":
        for node in self.nodes.values():
            node.validate()
        for channel in self._link_channels.values():
            channel.validate()
        return self

    def validate_path(self, path: Sequence[str]) -> None:
        """Check a benchmarking path: two or more nodes, links both ways, equal dims."""
        if len(path) < 2:
            raise TopologyError(f"a path needs at least two nodes, got {list(path)}")
        dims = {self.node(name).dim for name in path}
        if len(dims) != 1:
            raise DimensionMismatchError(f"path {list(path)} mixes register dimensions {dims}")
        for here, there in zip(path, path[1:]):
            self.link(here, there)
            self.link(there, here)

    def prepare(self, node: str) -> DensityMatrix:
        config = self.node(node)
        return apply(config.sp_noise, config.initial_state)

    def apply_gate(self, node: str, gate: CliffordElement, rho: DensityMatrix) -> DensityMatrix:
        config = self.node(node)
        if gate.dim != rho.dim or rho.dim != config.dim:
            raise DimensionMismatchError(
                f"gate of dim {gate.dim} on a dim-{rho.dim} state at node {node!r}"
            )
        u = gate.unitary
        rotated = DensityMatrix(u @ rho.matrix @ u.conj().T)
        self.clock += config.gate_duration
        return apply(config.post_gate_channel, rotated)

    def transmit(self, source: str, target: str, rho: DensityMatrix) -> DensityMatrix:
        channel = self.transmit_channel(source, target)
        self.clock += self.links[(source, target)].transmit_duration
        return apply(channel, rho)

    def measure_expectation(self, node: str, rho: DensityMatrix) -> float:
        """Probability of the effect outcome, with measurement noise on the effect."""
        config = self.node(node)
        if rho.dim != config.dim:
            raise DimensionMismatchError(f"dim-{rho.dim} state measured at node {node!r}")
        noisy_effect = config.meas_noise.adjoint_apply(config.effect.matrix)
        p = float(np.real(np.trace(noisy_effect @ rho.matrix)))
        if p < -PROBABILITY_ATOL or p > 1 + PROBABILITY_ATOL:
            logger.warning(f"Measurement probability {p} at node {node!r} clamped to [0, 1]")
        return min(max(p, 0.0), 1.0)


def hop_sequence(path: Sequence[str]) -> List[Tuple[str, str]]:
    """Directed hops of one bounce: out along the path, then back."""
    forward = list(zip(path, path[1:]))
    backward = [(there, here) for here, there in reversed(forward)]
    return forward + backward


def predicted_path_fidelity(network: Network, path: Sequence[str]) -> float:
    """
    Depolarizing fidelity the bounce decay follows under gate-independent noise.

    Each hop contributes the fidelity of (transmission after the sender's
    post-gate noise); the bounce value is the product over all hops.
    """
    network.validate_path(path)
    total = 1.0
    for source, target in hop_sequence(path):
        hop = compose_all(
            [network.node(source).post_gate_channel, network.transmit_channel(source, target)]
        )
        total *= depolarizing_fidelity(hop)
    return total


def chain_network(
    length: int,
    node_factory,
    link_factory,
    prefix: str = "N",
) -> Tuple[Network, List[str]]:
    """
    Homogeneous line of ``length`` nodes.

    Args:
        length: Number of nodes, at least 2.
        node_factory: Called with a node name, returns its NodeConfig.
        link_factory: Called with (source, target), returns the LinkConfig.
        prefix: Node names are prefix + 1-based position.

    Returns:
        The network and its node names in path order.
    """
    if length < 2:
        raise InvalidParameterError(f"a chain needs at least 2 nodes, got {length}")
    names = [f"{prefix}{i + 1}" for i in range(length)]
    nodes = [node_factory(name) for name in names]
    links = []
    for here, there in zip(names, names[1:]):
        links.append(link_factory(here, there))
        links.append(link_factory(there, here))
    return Network(nodes, links), names
