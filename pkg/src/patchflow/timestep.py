"""SSP-RK3 time advancement of all leaf patches and CFL step selection.

Each stage is issued as executor phases:

1. restriction of refined patches, finest level first (transfer phases);
2. ghost filling, one phase per level, coarsest first;
3. the per-patch pipeline: primitives, edge interpolation and flux per axis,
   divergence per axis, and the Runge-Kutta combination.

Buffers ``u0, u1, u2`` of every patch hold the Shu-Osher stages; stage ``s``
reads buffer ``s``.
"""
from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import NonPositiveState, SolverBlowup
from .executor import (ExecMode, ExecReport, Executor, ExecutorConfig, Task, check_conflicts,
                       schedule)
from .fields import FieldStore, ghost_filler, restrict_to_parent
from .gas import GasModel
from .mesh import NULL, Mesh
from .numerics import SchemeConfig, rhs_kernels

# destination buffer of each stage
_STAGE_DST = (1, 2, 0)


def ssprk3_update(u, L, dt):
    """One SSP-RK3 step of du/dt = L(u) for any array-like state."""
    u1 = u + dt * L(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * L(u1))
    return (1.0 / 3.0) * u + (2.0 / 3.0) * (u2 + dt * L(u2))


def compute_dt(store: FieldStore, m: Mesh, g: GasModel, cfl: float) -> float:
    """dt = cfl / max over leaf nodes of (|u|+c)/dx + (|v|+c)/dy."""
    if not cfl > 0.0:
        raise ValueError("cfl must be positive")
    worst = 0.0
    for p in m.leaves():
        pf = store[p]
        r = K.max_wave_rate(pf.u[0], pf.ng, pf.n, g.gamma, 1.0 / pf.dx, 1.0 / pf.dy)
        if r < 0.0:
            err = NonPositiveState(f"patch {p}: non-positive state while computing dt")
            err.patch = p
            raise err
        worst = max(worst, r)
    return cfl / worst


def _tagged(p, fn):
    def run():
        try:
            fn()
        except NonPositiveState as exc:
            exc.patch = p
            raise
    return run


class Stepper:
    """Builds and runs the task phases of SSP-RK3 steps on a mesh."""

    def __init__(self, store: FieldStore, mesh: Mesh, gas: GasModel,
                 scheme: SchemeConfig, executor: Executor | None = None):
        self.store = store
        self.mesh = mesh
        self.gas = gas
        self.scheme = scheme
        self.executor = executor or Executor(ExecutorConfig())
        self._own_executor = executor is None
        self.report = ExecReport(workers=self.executor.cfg.workers)
        self.transfer_report = ExecReport(workers=self.executor.cfg.workers)
        self._rhs = rhs_kernels(gas, scheme)
        self.step_count = 0
        self._dt = 0.0
        self._cache_key = None
        self._cache: dict = {}

    @property
    def mode(self) -> ExecMode:
        return self.executor.cfg.mode

    def close(self):
        if self._own_executor:
            self.executor.close()

    # -- phase builders -------------------------------------------------------

    def restrict_phases(self, src: int) -> list[list[Task]]:
        m = self.mesh
        phases = []
        for level in range(m.max_level - 1, -1, -1):
            tasks = []
            for p in m.patches_at_level(level):
                meta = m.meta[p]
                if not meta.has_children:
                    continue
                tasks.append(Task(
                    p, "restrict",
                    (lambda p=p: restrict_to_parent(self.store, m, p, src)),
                    reads=[("u", src, c, "int") for c in meta.child],
                    writes=[("u", src, p, "int")]))
            if tasks:
                phases.append(tasks)
        return phases

    def halo_phases(self, src: int) -> list[list[Task]]:
        m = self.mesh
        phases = []
        for level in range(m.max_level + 1):
            per_patch = {}
            for p in m.patches_at_level(level):
                meta = m.meta[p]
                tasks = []
                for d in range(8):
                    q = meta.nbr[d]
                    if q != NULL:
                        reads = [("u", src, q, "int")]
                    elif level > 0:
                        reads = [("u", src, meta.parent, "int")] + \
                            [("u", src, meta.parent, "ghost", k) for k in range(8)]
                    else:
                        reads = [("u", src, x, "int") for x in [p, *meta.nbr] if x != NULL]
                    tasks.append(Task(
                        p, f"halo-{d}",
                        ghost_filler(self.store, m, p, d, src),
                        reads=reads, writes=[("u", src, p, "ghost", d)]))
                per_patch[p] = tasks
            phases.extend(schedule(per_patch, self.mode, ordered=False))
        return phases

    def compute_phases(self, stage: int, dt: float | None = None) -> list[list[Task]]:
        """Stage pipeline; ``dt=None`` makes the tasks read the step size at run time."""
        src, dst = stage, _STAGE_DST[stage]
        get_dt = (lambda: self._dt) if dt is None else (lambda: dt)
        per_patch = {}
        for p in self.mesh.leaves():
            pf = self.store[p]
            ts = []
            for name, fn in self._rhs:
                ts.append(Task(p, name, _tagged(p, lambda fn=fn, pf=pf: fn(pf, src)),
                               reads=[("u", src, p, "all"), ("scratch", p)],
                               writes=[("scratch", p, name)]))
            ts.append(Task(p, "rk-axpy",
                           (lambda pf=pf: K.rk_stage(stage, pf.u[0], pf.u[1], pf.u[2], pf.rhs,
                                                     get_dt(), pf.ng, pf.n)),
                           reads=[("scratch", p), ("u", 0, p, "int"), ("u", src, p, "int")],
                           writes=[("u", dst, p, "int")]))
            per_patch[p] = ts
        return schedule(per_patch, self.mode, ordered=True)

    @property
    def kernels_per_patch(self) -> int:
        return len(self._rhs) + 1

    # -- execution ------------------------------------------------------------

    def _phases(self, kind: str, buf: int) -> list[list[Task]]:
        """Phase lists are rebuilt only when the active patches or their fields change."""
        key = (self.store.generation, tuple(self.mesh.active_ids()))
        if key != self._cache_key:
            self._cache_key = key
            self._cache = {}
        if (kind, buf) not in self._cache:
            build = {"restrict": self.restrict_phases, "halo": self.halo_phases,
                     "compute": self.compute_phases}[kind]
            phases = build(buf)
            if self.executor.cfg.check_conflicts:
                for tasks in phases:
                    check_conflicts(tasks)
            self._cache[(kind, buf)] = phases
        return self._cache[(kind, buf)]

    def _run(self, phases, report):
        for tasks in phases:
            report.merge(self.executor.run_phase(tasks, verified=True))

    def stage(self, stage: int, dt: float) -> None:
        self._dt = dt
        try:
            self._run(self._phases("restrict", stage), self.transfer_report)
            self._run(self._phases("halo", stage), self.report)
            self._run(self._phases("compute", stage), self.report)
        except NonPositiveState as exc:
            raise SolverBlowup(
                f"step {self.step_count}, stage {stage}: {exc}",
                step=self.step_count, stage=stage, patch=getattr(exc, "patch", None),
                node=getattr(exc, "node", None)) from exc

    def step(self, dt: float) -> None:
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        for s in range(3):
            self.stage(s, dt)
        self.step_count += 1

    def synchronize(self, buf: int = 0) -> None:
        """Restrict and fill all ghosts of buffer ``buf`` through the executor."""
        self._run(self._phases("restrict", buf), self.transfer_report)
        self._run(self._phases("halo", buf), self.report)


def ssprk3_step(store: FieldStore, m: Mesh, g: GasModel, cfg: SchemeConfig, dt: float,
                executor: Executor | None = None) -> ExecReport:
    """Advance every leaf patch by one SSP-RK3 step of size ``dt``."""
    st = Stepper(store, m, g, cfg, executor)
    try:
        st.step(dt)
    finally:
        st.close()
    return st.report


def conserved_totals(store: FieldStore, m: Mesh, buf: int = 0) -> np.ndarray:
    """Sum of each conservative variable times the node area over all leaves."""
    tot = np.zeros(4)
    for p in m.leaves():
        pf = store[p]
        tot += pf.interior(pf.u[buf]).sum(axis=(1, 2)) * pf.dx * pf.dy
    return tot
