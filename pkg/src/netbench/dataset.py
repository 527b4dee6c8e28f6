"""
Core data structures for benchmarking runs: tasks, per-sequence records and
the decay dataset, with CSV/JSON persistence.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import InsufficientDataError, InvariantViolationError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["m", "sequence_index", "seed", "b_value", "flip_chosen", "p_plus", "p_minus"]
FLOAT_FORMAT = "%.17g"
DATASET_CSV = "decay.csv"
DATASET_JSON = "decay.json"


class ShotModel(Enum):
    """How a sequence's exact expectation becomes a finite-shot estimate."""

    EXACT = "exact"
    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"


class FlipMode(Enum):
    """
    How the ending gate is chosen: SEQUENCE draws one fair coin per sequence,
    SHOT splits the shots evenly between both ending gates (no coin).
    """

    SHOT = "shot"
    SEQUENCE = "sequence"


class TaskStatus(Enum):
    """Status of tasks."""

    IDLE = "idle"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"


@dataclass
class SequenceTask:
    """One random sequence to evaluate."""

    task_id: int
    m: int
    sequence_index: int
    seed: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task_id": self.task_id,
            "m": self.m,
            "sequence_index": self.sequence_index,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SequenceTask":
        return cls(
            task_id=data["task_id"],
            m=data["m"],
            sequence_index=data["sequence_index"],
            seed=data["seed"],
        )


@dataclass(frozen=True)
class SequenceRecord:
    """
    Outcome of one sequence.

    ``b_value`` is the signed sample mean that enters the decay; ``p_plus``
    and ``p_minus`` are the exact outcome probabilities of the two ending
    gates, kept for variance analysis.
    """

    m: int
    sequence_index: int
    seed: int
    b_value: float
    flip_chosen: bool
    p_plus: float
    p_minus: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "sequence_index": self.sequence_index,
            "seed": self.seed,
            "b_value": self.b_value,
            "flip_chosen": self.flip_chosen,
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SequenceRecord":
        return cls(
            m=int(data["m"]),
            sequence_index=int(data["sequence_index"]),
            seed=int(data["seed"]),
            b_value=float(data["b_value"]),
            flip_chosen=bool(data["flip_chosen"]),
            p_plus=float(data.get("p_plus", np.nan)),
            p_minus=float(data.get("p_minus", np.nan)),
        )


@dataclass(frozen=True)
class DecayDataset:
    """
    Per-sequence results of a benchmarking run, sorted by (m, sequence_index).

    Means are taken per m in the order of ``m_values``.
    """

    m_values: Tuple[int, ...]
    records: Tuple[SequenceRecord, ...]
    n_sequences: int
    shots: int
    shot_model: ShotModel
    flip_mode: FlipMode = FlipMode.SHOT
    master_seed: int = 0
    path: Tuple[str, ...] = ()
    config_hash: str = ""
    extra: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ordered = tuple(sorted(self.records, key=lambda r: (r.m, r.sequence_index)))
        object.__setattr__(self, "records", ordered)
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))

    def frame(self) -> pd.DataFrame:
        """Records as a table with the CSV column layout."""
        return pd.DataFrame([r.to_dict() for r in self.records], columns=CSV_COLUMNS)

    def values_by_m(self) -> Dict[int, np.ndarray]:
        grouped: Dict[int, List[float]] = {m: [] for m in self.m_values}
        for record in self.records:
            grouped.setdefault(record.m, []).append(record.b_value)
        return {m: np.asarray(values, dtype=float) for m, values in grouped.items()}

    @property
    def means(self) -> np.ndarray:
        """b_m for each m in ``m_values``."""
        by_m = self.values_by_m()
        missing = [m for m in self.m_values if len(by_m[m]) == 0]
        if missing:
            raise InsufficientDataError(f"no sequences recorded for m in {missing}")
        return np.array([by_m[m].mean() for m in self.m_values])

    @property
    def standard_errors(self) -> np.ndarray:
        """Standard error of each b_m from the sequence spread."""
        by_m = self.values_by_m()
        return np.array(
            [
                by_m[m].std(ddof=1) / np.sqrt(len(by_m[m])) if len(by_m[m]) > 1 else np.nan
                for m in self.m_values
            ]
        )

    def validate(self) -> "DecayDataset":
        counts = self.frame().groupby("m").size()
        for m in self.m_values:
            if counts.get(m, 0) != self.n_sequences:
                raise InvariantViolationError(
                    f"m={m} has {counts.get(m, 0)} sequences, expected {self.n_sequences}"
                )
        values = np.array([r.b_value for r in self.records])
        if values.size and (values.min() < -1 - 1e-12 or values.max() > 1 + 1e-12):
            raise InvariantViolationError("per-sequence values outside [-1, 1]")
        return self

    def metadata(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "m_values": list(self.m_values),
            "n_sequences": self.n_sequences,
            "shots": self.shots,
            "shot_model": self.shot_model.value,
            "flip_mode": self.flip_mode.value,
            "path": list(self.path),
            **self.extra,
        }

    def save(self, out_dir: str) -> Tuple[str, str]:
        """Write ``decay.csv`` and its ``decay.json`` sidecar into ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, DATASET_CSV)
        json_path = os.path.join(out_dir, DATASET_JSON)
        write_dataset_csv(csv_path, self)
        write_json(json_path, self.metadata())
        logger.info(f"Wrote {len(self.records)} sequence records to {csv_path}")
        return csv_path, json_path

    @classmethod
    def load(cls, csv_path: str, json_path: Optional[str] = None) -> "DecayDataset":
        """Read a dataset written by ``save``."""
        if json_path is None:
            json_path = os.path.join(os.path.dirname(csv_path), DATASET_JSON)
        with open(json_path, "r", encoding="utf-8") as f:
            meta = json.load(f)
        table = pd.read_csv(csv_path, float_precision="round_trip")
        records = [SequenceRecord.from_dict(row) for row in table.to_dict("records")]
        known = {
            "config_hash", "master_seed", "m_values", "n_sequences",
            "shots", "shot_model", "flip_mode", "path",
        }
        return cls(
            m_values=tuple(meta["m_values"]),
            records=tuple(records),
            n_sequences=meta["n_sequences"],
            shots=meta["shots"],
            shot_model=ShotModel(meta["shot_model"]),
            flip_mode=FlipMode(meta.get("flip_mode", FlipMode.SHOT.value)),
            master_seed=meta.get("master_seed", 0),
            path=tuple(meta.get("path", ())),
            config_hash=meta.get("config_hash", ""),
            extra={k: v for k, v in meta.items() if k not in known},
        )


def write_dataset_csv(filename: str, dataset: DecayDataset):
    """Write records with a fixed float format so reruns are byte-identical."""
    temp_file = filename + ".tmp"
    dataset.frame().to_csv(temp_file, index=False, float_format=FLOAT_FORMAT)
    os.replace(temp_file, filename)


def write_json(filename: str, payload: Dict[str, Any]):
    temp_file = filename + ".tmp"
    with open(temp_file, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(temp_file, filename)


def write_table_csv(filename: str, rows: Sequence[Dict[str, Any]], columns: Sequence[str]):
    """Write a small result table (sweep summary, planner curve)."""
    temp_file = filename + ".tmp"
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(
        temp_file, index=False, float_format=FLOAT_FORMAT
    )
    os.replace(temp_file, filename)
