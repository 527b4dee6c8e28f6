"""
Network benchmarking protocol.

A sequence of m bounces is sent along a path A_1 ... A_K: in every bounce a
random gate is applied before each hop out to A_K and before each hop back
to A_1. At A_1 the gate inverting the ideal product, optionally followed by
the flip gate P, ends the sequence before measurement. The decay of the
signed mean outcome with m is governed by the path's depolarizing fidelity.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .cliffords import CliffordGroup, generate
from .dataset import DecayDataset, FlipMode, ShotModel
from .errors import InvalidParameterError, InvariantViolationError
from .network import Network, hop_sequence

logger = logging.getLogger(__name__)


def derive_seed(master_seed: int, m: int, sequence_index: int) -> int:
    """Counter-based seed of sequence ``sequence_index`` at bounce count ``m``."""
    state = np.random.SeedSequence(master_seed, spawn_key=(m, sequence_index))
    return int(state.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class SequenceSpec:
    """
    Random choices of one sequence.

    ``gate_indices[i]`` lists the group indices used in bounce i, one per hop
    in the order of ``hop_sequence(path)``.
    """

    m: int
    gate_indices: Tuple[Tuple[int, ...], ...]
    flip_chosen: bool
    seed: int

    @classmethod
    def draw(
        cls,
        m: int,
        hops_per_bounce: int,
        group_order: int,
        seed: int,
        rng: Optional[np.random.Generator] = None,
    ) -> "SequenceSpec":
        """
        Draw gates and the flip coin from ``rng`` (a fresh generator seeded
        with ``seed`` when omitted).
        """
        if m < 0:
            raise InvalidParameterError(f"negative bounce count {m}")
        rng = np.random.default_rng(seed) if rng is None else rng
        gates = rng.integers(0, group_order, size=(m, hops_per_bounce))
        flip_chosen = bool(rng.random() < 0.5)
        return cls(
            m=m,
            gate_indices=tuple(tuple(int(g) for g in row) for row in gates),
            flip_chosen=flip_chosen,
            seed=seed,
        )

    @property
    def gate_count(self) -> int:
        return sum(len(row) for row in self.gate_indices)

    def validate(self, path_length: int) -> "SequenceSpec":
        expected = 2 * self.m * (path_length - 1)
        if len(self.gate_indices) != self.m or self.gate_count != expected:
            raise InvariantViolationError(
                f"sequence has {self.gate_count} gates, a {path_length}-node path needs {expected}"
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "gate_indices": [list(row) for row in self.gate_indices],
            "flip_chosen": self.flip_chosen,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SequenceSpec":
        return cls(
            m=data["m"],
            gate_indices=tuple(tuple(row) for row in data["gate_indices"]),
            flip_chosen=data["flip_chosen"],
            seed=data["seed"],
        )


def evaluate_branches(
    network: Network,
    path: Sequence[str],
    spec: SequenceSpec,
    group: Optional[CliffordGroup] = None,
) -> Tuple[float, float]:
    """
    Exact outcome probabilities of a sequence for both ending gates.

    Returns:
        (p_plus, p_minus): probabilities of the effect outcome when the ending
        gate is the inverse alone and when it is followed by the flip gate.
    """
    network.validate_path(path)
    spec.validate(len(path))
    start = network.node(path[0])
    group = generate(start.n_qubits) if group is None else group

    sim = network.fork()
    rho = sim.prepare(path[0])
    product = np.eye(start.dim, dtype=complex)
    hops = hop_sequence(path)
    for bounce in spec.gate_indices:
        for (here, there), index in zip(hops, bounce):
            gate = group[index]
            rho = sim.apply_gate(here, gate, rho)
            product = gate.unitary @ product
            rho = sim.transmit(here, there, rho)

    inverse = product.conj().T
    flip = start.flip_unitary.unitary
    outcomes = []
    for ending in (inverse, flip @ inverse):
        branch = network.fork()
        branch.clock = sim.clock
        final = branch.apply_gate(path[0], group.lookup(ending), rho)
        outcomes.append(branch.measure_expectation(path[0], final))
    return outcomes[0], outcomes[1]


def run_sequence_path(
    network: Network,
    path: Sequence[str],
    spec: SequenceSpec,
    group: Optional[CliffordGroup] = None,
) -> float:
    """
    Signed expected outcome of one sequence along ``path``.

    Returns p_plus, or -p_minus when the sequence's coin chose the flip gate.
    """
    p_plus, p_minus = evaluate_branches(network, path, spec, group)
    return -p_minus if spec.flip_chosen else p_plus


def run_sequence_2node(
    network: Network,
    node_a: str,
    node_b: str,
    spec: SequenceSpec,
    group: Optional[CliffordGroup] = None,
) -> float:
    return run_sequence_path(network, [node_a, node_b], spec, group)


def apply_shot_noise(
    p_signed: float,
    shots: int,
    model: Union[ShotModel, str],
    rng: np.random.Generator,
) -> float:
    """
    Finite-shot estimate of a signed probability.

    The sign is carried through; the underlying probability p = |p_signed|
    is replaced by its sample mean over ``shots`` measurements (Gaussian
    approximation clipped to [0, 1], or exact binomial counts).
    """
    model = ShotModel(model)
    if shots < 1:
        raise InvalidParameterError(f"shots must be at least 1, got {shots}")
    if abs(p_signed) > 1 + 1e-12:
        raise InvalidParameterError(f"|{p_signed}| is not a probability")
    if model is ShotModel.EXACT:
        return p_signed
    sign = math.copysign(1.0, p_signed)
    p = min(abs(p_signed), 1.0)
    if model is ShotModel.GAUSSIAN:
        estimate = p + rng.normal(0.0, math.sqrt(p * (1.0 - p) / shots))
        estimate = min(max(estimate, 0.0), 1.0)
    else:
        estimate = rng.binomial(shots, p) / shots
    return sign * estimate


def split_shots(shots: int) -> Tuple[int, int]:
    """Stratified (plain, flipped) shot counts used by the SHOT flip mode."""
    plain = (shots + 1) // 2
    return plain, max(shots - plain, 1)


def sample_sequence_value(
    p_plus: float,
    p_minus: float,
    flip_chosen: bool,
    shots: int,
    shot_model: ShotModel,
    flip_mode: FlipMode,
    rng: np.random.Generator,
) -> float:
    """Signed sample mean of one sequence under the shot and flip models."""
    if flip_mode is FlipMode.SEQUENCE:
        signed = -p_minus if flip_chosen else p_plus
        return apply_shot_noise(signed, shots, shot_model, rng)
    plain, flipped = split_shots(shots)
    return 0.5 * (
        apply_shot_noise(p_plus, plain, shot_model, rng)
        + apply_shot_noise(-p_minus, flipped, shot_model, rng)
    )


def run_protocol_path(
    network: Network,
    path: Sequence[str],
    m_values: Sequence[int],
    n_sequences: int,
    shots: int,
    shot_model: Union[ShotModel, str] = ShotModel.GAUSSIAN,
    master_seed: int = 0,
    group: Optional[CliffordGroup] = None,
    flip_mode: Union[FlipMode, str] = FlipMode.SHOT,
    jobs: int = 1,
    config_hash: str = "",
) -> DecayDataset:
    """
    Run ``n_sequences`` random sequences for every bounce count in ``m_values``.

    Sequence (m, n) draws all its randomness from ``derive_seed(master_seed,
    m, n)``, so the dataset does not depend on ``jobs``.
    """
    from .coordinator import Coordinator

    network.validate_path(path)
    if len(set(m_values)) != len(m_values) or any(m < 0 for m in m_values):
        raise InvalidParameterError(f"bounce counts must be distinct and >= 0: {list(m_values)}")
    if n_sequences < 1:
        raise InvalidParameterError(f"need at least one sequence per m, got {n_sequences}")
    if shots < 1:
        raise InvalidParameterError(f"shots must be at least 1, got {shots}")

    coordinator = Coordinator(
        network=network,
        path=list(path),
        m_values=list(m_values),
        n_sequences=n_sequences,
        shots=shots,
        shot_model=ShotModel(shot_model),
        flip_mode=FlipMode(flip_mode),
        master_seed=master_seed,
        group=group,
        jobs=jobs,
    )
    records = coordinator.run()
    dataset = DecayDataset(
        m_values=tuple(m_values),
        records=tuple(records),
        n_sequences=n_sequences,
        shots=shots,
        shot_model=ShotModel(shot_model),
        flip_mode=FlipMode(flip_mode),
        master_seed=master_seed,
        path=tuple(path),
        config_hash=config_hash,
    )
    return dataset.validate()


def run_protocol_2node(
    network: Network,
    node_a: str,
    node_b: str,
    m_values: Sequence[int],
    n_sequences: int,
    shots: int,
    shot_model: Union[ShotModel, str] = ShotModel.GAUSSIAN,
    master_seed: int = 0,
    **kwargs,
) -> DecayDataset:
    return run_protocol_path(
        network, [node_a, node_b], m_values, n_sequences, shots, shot_model, master_seed, **kwargs
    )


def run_protocol_multinode(
    network: Network,
    path: Sequence[str],
    m_values: Sequence[int],
    n_sequences: int,
    shots: int,
    shot_model: Union[ShotModel, str] = ShotModel.GAUSSIAN,
    master_seed: int = 0,
    **kwargs,
) -> DecayDataset:
    return run_protocol_path(
        network, path, m_values, n_sequences, shots, shot_model, master_seed, **kwargs
    )
