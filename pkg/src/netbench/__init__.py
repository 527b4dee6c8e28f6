"""
Network benchmarking package initialization.
"""

from .channels import (
    DensityMatrix,
    Effect,
    QuantumChannel,
    apply,
    average_fidelity,
    average_to_depolarizing,
    bright_state_resource,
    compose,
    decoherence_channel,
    depolarizing_channel,
    depolarizing_fidelity,
    depolarizing_to_average,
    entanglement_fidelity,
    singlet_fraction,
    teleportation_channel,
    twirl,
)
from .cliffords import (
    CliffordElement,
    CliffordGroup,
    frame_potential_2,
    generate,
    invert_sequence,
    pauli_group,
    sample,
)
from .config import ExperimentConfig, ProtocolConfig, build_network
from .coordinator import Coordinator
from .dataset import DecayDataset, FlipMode, SequenceRecord, SequenceTask, ShotModel
from .errors import (
    ConfigError,
    DimensionMismatchError,
    GroupLookupError,
    InsufficientDataError,
    InvalidParameterError,
    InvariantViolationError,
    NetbenchError,
    NoSignalError,
    TaskFailedError,
    TopologyError,
)
from .estimate import (
    BootstrapResult,
    FitResult,
    StatReport,
    VarianceComponents,
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
from .network import (
    DepolarizingLink,
    ExplicitLink,
    LinkConfig,
    Network,
    NodeConfig,
    TeleportationLink,
    predicted_path_fidelity,
)
from .presets import load_preset, preset_names
from .protocol import (
    SequenceSpec,
    apply_shot_noise,
    run_protocol_2node,
    run_protocol_multinode,
    run_sequence_2node,
    run_sequence_path,
)
from .worker import Worker

__version__ = "1.0.0"

__all__ = [
    # States and channels
    "DensityMatrix",
    "Effect",
    "QuantumChannel",
    "apply",
    "compose",
    "depolarizing_channel",
    "decoherence_channel",
    "teleportation_channel",
    "bright_state_resource",
    "entanglement_fidelity",
    "average_fidelity",
    "depolarizing_fidelity",
    "depolarizing_to_average",
    "average_to_depolarizing",
    "twirl",
    "singlet_fraction",
    # Gate groups
    "CliffordElement",
    "CliffordGroup",
    "generate",
    "invert_sequence",
    "frame_potential_2",
    "pauli_group",
    "sample",
    # Network model
    "NodeConfig",
    "LinkConfig",
    "ExplicitLink",
    "TeleportationLink",
    "DepolarizingLink",
    "Network",
    "predicted_path_fidelity",
    # Protocol
    "SequenceSpec",
    "SequenceTask",
    "SequenceRecord",
    "DecayDataset",
    "ShotModel",
    "FlipMode",
    "Coordinator",
    "Worker",
    "run_sequence_path",
    "run_sequence_2node",
    "run_protocol_2node",
    "run_protocol_multinode",
    "apply_shot_noise",
    # Estimation
    "FitResult",
    "BootstrapResult",
    "VarianceComponents",
    "StatReport",
    "fit_decay",
    "fit_decay_data",
    "bootstrap_ci",
    "symmetric_link_fidelity",
    "fisher_information",
    "fisher_information_per_cost",
    "optimal_bounce_count",
    "crb_cost_bound",
    "crb_variance_floor",
    "variance_decomposition",
    "statistics_report",
    "fit_log_linear",
    # Configuration
    "ExperimentConfig",
    "ProtocolConfig",
    "build_network",
    "load_preset",
    "preset_names",
    # Errors
    "NetbenchError",
    "DimensionMismatchError",
    "InvalidParameterError",
    "InvariantViolationError",
    "GroupLookupError",
    "TopologyError",
    "InsufficientDataError",
    "NoSignalError",
    "ConfigError",
    "TaskFailedError",
]
