"""Task-based execution of per-patch kernels.

A *phase* is a list of tasks whose footprints do not conflict; phases are
separated by full barriers. Worker threads pull tasks from a shared queue, so
idle workers take whatever work remains in the phase.

Granularity is switchable. In ``fine`` mode every kernel of the per-patch
pipeline is its own task; in ``fused`` mode the kernels of one patch are
composed into a single task, the equivalent of inlining the kernel calls into
their caller. An optional fixed cost per dispatched task models runtime
launch overhead deterministically.
"""
from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Hashable, Sequence

from .errors import ConflictDetected

log = logging.getLogger(__name__)


class ExecMode(str, Enum):
    FINE = "fine"
    FUSED = "fused"


@dataclass(frozen=True)
class ExecutorConfig:
    mode: ExecMode = ExecMode.FUSED
    workers: int = 1
    injected_overhead: float = 0.0  # seconds per dispatched task
    check_conflicts: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", ExecMode(self.mode))
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.injected_overhead < 0:
            raise ValueError("injected_overhead must be >= 0")


@dataclass
class Task:
    patch: int
    kernel: str
    fn: Callable[[], None]
    phase: int = 0
    reads: Sequence[Hashable] = ()
    writes: Sequence[Hashable] = ()


@dataclass
class ExecReport:
    phase_times: list[float] = field(default_factory=list)
    dispatch_overhead: float = 0.0
    kernel_time: float = 0.0
    task_count: int = 0
    workers: int = 1

    @property
    def wall_time(self) -> float:
        return sum(self.phase_times)

    @property
    def busy_fraction(self) -> float:
        wall = self.wall_time
        if wall <= 0.0:
            return 0.0
        return min(1.0, self.kernel_time / (wall * self.workers))

    def merge(self, other: "ExecReport") -> "ExecReport":
        self.phase_times.extend(other.phase_times)
        self.dispatch_overhead += other.dispatch_overhead
        self.kernel_time += other.kernel_time
        self.task_count += other.task_count
        self.workers = max(self.workers, other.workers)
        return self


def check_conflicts(tasks: Sequence[Task]) -> None:
    """Raise ConflictDetected if two tasks share a region and one writes it."""
    writer: dict[Hashable, int] = {}
    for k, t in enumerate(tasks):
        for r in t.writes:
            prev = writer.setdefault(r, k)
            if prev != k:
                raise ConflictDetected(
                    f"tasks {tasks[prev].kernel}@{tasks[prev].patch} and "
                    f"{t.kernel}@{t.patch} both write {r!r}")
    for k, t in enumerate(tasks):
        for r in t.reads:
            w = writer.get(r)
            if w is not None and w != k:
                raise ConflictDetected(
                    f"task {t.kernel}@{t.patch} reads {r!r} written by "
                    f"{tasks[w].kernel}@{tasks[w].patch}")


def _spin(seconds: float) -> None:
    end = time.perf_counter() + seconds
    while time.perf_counter() < end:
        pass


class Executor:
    """Pool of worker threads executing one phase at a time."""

    def __init__(self, cfg: ExecutorConfig = ExecutorConfig()):
        self.cfg = cfg
        self._queue: queue.SimpleQueue = queue.SimpleQueue()
        self._lock = threading.Lock()
        self._done = threading.Event()
        self._pending = 0
        self._error: BaseException | None = None
        self._kernel_time = 0.0
        self._overhead = 0.0
        self._threads = [threading.Thread(target=self._work, daemon=True,
                                          name=f"patchflow-worker-{k}")
                         for k in range(cfg.workers)]
        for t in self._threads:
            t.start()

    def _work(self) -> None:
        overhead = self.cfg.injected_overhead
        while True:
            task = self._queue.get()
            if task is None:
                return
            t_deq = time.perf_counter()
            if overhead:
                _spin(overhead)
            t0 = time.perf_counter()
            err = None
            try:
                task.fn()
            except BaseException as exc:  # re-raised at the barrier
                err = exc
            t1 = time.perf_counter()
            with self._lock:
                self._kernel_time += t1 - t0
                if err is not None and self._error is None:
                    self._error = err
                self._pending -= 1
                last = self._pending == 0
                self._overhead += (t0 - t_deq) + (time.perf_counter() - t1)
            if last:
                self._done.set()

    def run_phase(self, tasks: Sequence[Task], verified: bool = False) -> ExecReport:
        """Run ``tasks`` to completion; ``verified`` skips the footprint check."""
        rep = ExecReport(workers=self.cfg.workers)
        if not tasks:
            return rep
        t_start = time.perf_counter()
        if self.cfg.check_conflicts and not verified:
            check_conflicts(tasks)
        self._kernel_time = 0.0
        self._overhead = 0.0
        self._error = None
        self._pending = len(tasks)
        self._done.clear()
        t_sub = time.perf_counter()
        for t in tasks:
            self._queue.put(t)
        submit = time.perf_counter() - t_sub
        self._done.wait()
        rep.phase_times.append(time.perf_counter() - t_start)
        rep.kernel_time = self._kernel_time
        rep.dispatch_overhead = self._overhead + submit
        rep.task_count = len(tasks)
        if self._error is not None:
            raise self._error
        return rep

    def close(self) -> None:
        for _ in self._threads:
            self._queue.put(None)
        for t in self._threads:
            t.join()
        self._threads = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def run_phase(tasks: Sequence[Task], cfg: ExecutorConfig = ExecutorConfig()) -> ExecReport:
    """Run one phase on a temporary executor."""
    with Executor(cfg) as ex:
        return ex.run_phase(tasks)


# -- pipeline composition -----------------------------------------------------

def fuse(patch: int, tasks: Sequence[Task], name: str = "fused") -> Task:
    """Compose the kernels of one patch into a single task, in order."""
    fns = [t.fn for t in tasks]

    def run():
        for fn in fns:
            fn()

    reads = {r for t in tasks for r in t.reads}
    writes = {w for t in tasks for w in t.writes}
    return Task(patch, name, run, tasks[0].phase if tasks else 0,
                tuple(reads - writes), tuple(writes))


def schedule(per_patch: dict[int, list[Task]], mode: ExecMode,
             ordered: bool = True) -> list[list[Task]]:
    """Turn per-patch kernel lists into a list of phases.

    ``ordered`` kernels depend on their predecessor within the patch: in fine
    mode kernel k of every patch forms phase k. Unordered kernels (disjoint
    footprints) all go into one phase. Fused mode always yields one phase with
    one task per patch.
    """
    if not per_patch:
        return []
    if mode is ExecMode.FUSED:
        return [[fuse(p, ts, ts[0].kernel.split("-")[0] + "-fused") for p, ts in per_patch.items()]]
    if not ordered:
        return [[t for ts in per_patch.values() for t in ts]]
    depth = max(len(ts) for ts in per_patch.values())
    return [[ts[k] for ts in per_patch.values() if k < len(ts)] for k in range(depth)]
