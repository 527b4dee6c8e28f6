"""
Coordinator for benchmarking runs.
Creates one task per random sequence, hands batches to workers, collects
records and reassigns failed tasks.
"""

import logging
import math
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .cliffords import CliffordGroup
from .dataset import FlipMode, SequenceRecord, SequenceTask, ShotModel, TaskStatus
from .errors import TaskFailedError
from .network import Network
from .protocol import derive_seed
from .worker import TaskResult, Worker, init_process_worker, run_process_batch

logger = logging.getLogger(__name__)


@dataclass
class TaskInfo:
    """Information about a task's execution."""

    task: SequenceTask
    status: TaskStatus = TaskStatus.IDLE
    attempts: int = 0
    start_time: Optional[float] = None
    completion_time: Optional[float] = None
    record: Optional[SequenceRecord] = None


class Coordinator:
    """
    Coordinator for a benchmarking run.
    Distributes sequence tasks to workers, tracks progress and handles failures.

    With ``jobs == 1`` a single worker runs in this process; otherwise a pool
    of ``jobs`` processes each builds its own worker. Records only depend on
    the task seeds, so the result is the same for any ``jobs``.
    """

    def __init__(
        self,
        network: Network,
        path: Sequence[str],
        m_values: Sequence[int],
        n_sequences: int,
        shots: int,
        shot_model: ShotModel,
        flip_mode: FlipMode,
        master_seed: int,
        group: Optional[CliffordGroup] = None,
        jobs: int = 1,
        batch_size: Optional[int] = None,
        max_attempts: int = 3,
        worker_cls: type = Worker,
    ):
        """
        Initialize the coordinator.

        Args:
            network: Network to benchmark
            path: Node names the sequences bounce along
            m_values: Bounce counts
            n_sequences: Sequences per bounce count
            shots: Measurements per sequence
            shot_model: Finite-shot model
            flip_mode: Shot split between both ending gates, or one coin per sequence
            master_seed: Seed every task seed is derived from
            group: Gate group (Clifford group of the register by default)
            jobs: Number of worker processes
            batch_size: Tasks per assignment; sized for about four batches per job by default
            max_attempts: Attempts per task before the run is abandoned
            worker_cls: Worker implementation
        """
        self.jobs = max(1, int(jobs))
        self.max_attempts = max_attempts
        self.worker_kwargs = dict(
            network=network,
            path=list(path),
            shots=shots,
            shot_model=shot_model,
            flip_mode=flip_mode,
            group=group,
        )
        self.worker_cls = worker_cls

        self.tasks: Dict[int, TaskInfo] = {}
        self.next_task_id = 0
        self._create_tasks(m_values, n_sequences, master_seed)

        n_tasks = len(self.tasks)
        if batch_size is None:
            batch_size = max(1, math.ceil(n_tasks / (4 * self.jobs)))
        self.batch_size = batch_size

    def _create_tasks(self, m_values: Sequence[int], n_sequences: int, master_seed: int):
        """Create one task per (m, sequence index)."""
        for m in m_values:
            for n in range(n_sequences):
                task = SequenceTask(
                    task_id=self.next_task_id,
                    m=m,
                    sequence_index=n,
                    seed=derive_seed(master_seed, m, n),
                )
                self.tasks[self.next_task_id] = TaskInfo(task=task)
                self.next_task_id += 1

    def done(self) -> bool:
        """Check if every task has a record."""
        return all(info.status == TaskStatus.COMPLETED for info in self.tasks.values())

    def task_durations(self) -> Dict[int, float]:
        """Seconds from the last assignment to completion, per completed task."""
        return {
            task_id: info.completion_time - info.start_time
            for task_id, info in self.tasks.items()
            if info.completion_time is not None and info.start_time is not None
        }

    def run(self) -> List[SequenceRecord]:
        """Execute all tasks and return their records in task order."""
        started = time.time()
        logger.info(
            f"Running {len(self.tasks)} sequences with {self.jobs} job(s), "
            f"batches of {self.batch_size}"
        )
        if self.jobs == 1:
            worker = self.worker_cls(**self.worker_kwargs)
            while not self.done():
                batch = self._assign_batch()
                self._handle_results(worker.execute_batch(batch))
        else:
            self._run_pool()
        logger.info(f"All {len(self.tasks)} sequences completed in {time.time() - started:.1f}s")
        durations = self.task_durations()
        if durations:
            slowest = max(durations, key=durations.get)
            logger.debug(
                f"Slowest sequence: task {slowest} (m={self.tasks[slowest].task.m}) "
                f"in {durations[slowest]:.3f}s"
            )
        return [self.tasks[task_id].record for task_id in sorted(self.tasks)]

    def _run_pool(self):
        with ProcessPoolExecutor(
            max_workers=self.jobs,
            initializer=init_process_worker,
            initargs=(self.worker_cls, self.worker_kwargs),
        ) as pool:
            pending = {}
            while not self.done():
                while len(pending) < 2 * self.jobs:
                    batch = self._assign_batch()
                    if not batch:
                        break
                    pending[pool.submit(run_process_batch, batch)] = batch
                if not pending:
                    break
                finished, _ = wait(pending, return_when=FIRST_COMPLETED)
                for future in finished:
                    batch = pending.pop(future)
                    try:
                        results = future.result()
                    except Exception as e:
                        logger.error(f"Batch of {len(batch)} tasks crashed: {e}")
                        results = [(task.task_id, None, str(e)) for task in batch]
                    self._handle_results(results)

    def _assign_batch(self) -> List[SequenceTask]:
        """Mark the next idle tasks as in progress and return them."""
        batch = []
        for info in self.tasks.values():
            if info.status == TaskStatus.IDLE:
                info.status = TaskStatus.IN_PROGRESS
                info.start_time = time.time()
                info.attempts += 1
                batch.append(info.task)
                if len(batch) == self.batch_size:
                    break
        if batch:
            logger.debug(f"Assigned tasks {batch[0].task_id}..{batch[-1].task_id}")
        return batch

    def _handle_results(self, results: List[TaskResult]):
        """Record completions and reset failed tasks for reassignment."""
        for task_id, record, error_message in results:
            info = self.tasks[task_id]
            if record is not None:
                info.status = TaskStatus.COMPLETED
                info.completion_time = time.time()
                info.record = record
                continue
            logger.warning(f"Task {task_id} failed (attempt {info.attempts}): {error_message}")
            if info.attempts >= self.max_attempts:
                raise TaskFailedError(
                    f"task {task_id} (m={info.task.m}, sequence {info.task.sequence_index}) "
                    f"failed {info.attempts} times: {error_message}"
                )
            info.status = TaskStatus.IDLE
            info.start_time = None
