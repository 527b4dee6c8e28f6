"""
Worker implementation for sequence evaluation.
Executes benchmarking sequences assigned by the coordinator, either inline or
inside a process pool.
"""

import logging
import uuid
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cliffords import CliffordGroup, generate
from .dataset import FlipMode, SequenceRecord, SequenceTask, ShotModel
from .network import Network, hop_sequence
from .protocol import SequenceSpec, evaluate_branches, sample_sequence_value

logger = logging.getLogger(__name__)

# (task_id, record or None, error message)
TaskResult = Tuple[int, Optional[SequenceRecord], str]


class Worker:
    """
    Evaluates sequences on a fixed network path.

    Each task carries its own seed; the worker draws the sequence's gates and
    flip coin from it, simulates both ending gates exactly and then applies
    the shot model with the same generator.
    """

    def __init__(
        self,
        network: Network,
        path: Sequence[str],
        shots: int,
        shot_model: ShotModel,
        flip_mode: FlipMode,
        group: Optional[CliffordGroup] = None,
    ):
        """
        Initialize worker with the experiment it serves.

        Args:
            network: Network to simulate; never mutated
            path: Node names the sequences bounce along
            shots: Measurements per sequence
            shot_model: Finite-shot model
            flip_mode: Shot split between both ending gates, or one coin per sequence
            group: Gate group; the Clifford group of the path's register by default
        """
        self.worker_id = str(uuid.uuid4())
        self.network = network
        self.path = list(path)
        self.shots = shots
        self.shot_model = shot_model
        self.flip_mode = flip_mode
        start = network.node(self.path[0])
        self.group = generate(start.n_qubits) if group is None else group
        self.hops_per_bounce = len(hop_sequence(self.path))

    def execute(self, task: SequenceTask) -> SequenceRecord:
        """Run one sequence."""
        rng = np.random.default_rng(task.seed)
        spec = SequenceSpec.draw(task.m, self.hops_per_bounce, len(self.group), task.seed, rng)
        p_plus, p_minus = evaluate_branches(self.network, self.path, spec, self.group)
        value = sample_sequence_value(
            p_plus,
            p_minus,
            spec.flip_chosen,
            self.shots,
            self.shot_model,
            self.flip_mode,
            rng,
        )
        return SequenceRecord(
            m=task.m,
            sequence_index=task.sequence_index,
            seed=task.seed,
            b_value=value,
            flip_chosen=spec.flip_chosen,
            p_plus=p_plus,
            p_minus=p_minus,
        )

    def execute_batch(self, tasks: Sequence[SequenceTask]) -> List[TaskResult]:
        """Run tasks, reporting failures per task instead of raising."""
        results: List[TaskResult] = []
        for task in tasks:
            try:
                results.append((task.task_id, self.execute(task), ""))
            except Exception as e:
                logger.error(f"Worker {self.worker_id} failed task {task.task_id}: {e}")
                results.append((task.task_id, None, f"{type(e).__name__}: {e}"))
        return results


_process_worker: Optional[Worker] = None


def init_process_worker(worker_cls: type, kwargs: dict):
    """Process-pool initializer: build this process's worker once."""
    global _process_worker
    _process_worker = worker_cls(**kwargs)
    logger.debug(f"Worker {_process_worker.worker_id} started")


def run_process_batch(tasks: Sequence[SequenceTask]) -> List[TaskResult]:
    """Entry point executed in pool processes."""
    if _process_worker is None:
        raise RuntimeError("worker process was not initialized")
    return _process_worker.execute_batch(tasks)
