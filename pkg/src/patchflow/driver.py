"""Run configuration and the simulation driver."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cases
from .errors import ConfigError, MeshError
from .executor import Executor, ExecutorConfig, ExecReport
from .fields import FieldStore, prolong_to_children
from .gas import GasModel
from .mesh import Mesh
from .numerics import SchemeConfig
from .snapshot import level_primitives, write_pgm, write_snapshot
from .timestep import Stepper, compute_dt, conserved_totals

log = logging.getLogger(__name__)

CASES = ("implosion", "shear_layer", "entropy_wave", "sod_1d")
SCHEME_ALIASES = {"weno": "weno5", "weno5": "weno5", "central": "central4", "central4": "central4"}


@dataclass
class RunConfig:
    case: str = "implosion"
    n: int = 256                 # level-0 nodes per side (along x for sod_1d)
    patch: int = 64              # interior nodes per patch side
    cfl: float = 0.45
    scheme: str = "weno5"
    characteristic: bool = True
    weno_eps: float = 1e-6
    gamma: float = 1.4
    gas_constant: float = 1.0
    t_end: float = 0.1
    max_steps: int = 10**9
    output_every: int = 0        # steps between snapshots; 0 = first and last only
    out: str = ""                # output directory; empty disables files
    formats: str = "vtk,pgm"
    exec_mode: str = "fused"
    workers: int = 1
    injected_overhead: float = 0.0
    amr: bool = False
    max_level: int = 2
    tag_threshold: float = 0.05
    regrid_every: int = 4
    capacity: int = 0            # patch slots; 0 = sized from max_level
    density_ratio: float = 2.0
    convective_mach: float = 0.7
    wavenumber: int = 5
    perturb_amp: float = 0.05
    shear_thickness: float = 0.01
    invert_ratio: bool = False
    schlieren_k: float = 15.0
    check_symmetry: bool = False

    def __post_init__(self):
        self.scheme = SCHEME_ALIASES.get(self.scheme, self.scheme)
        self.validate()

    def validate(self) -> None:
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; choose from {CASES}")
        if self.scheme not in ("weno5", "central4"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must be in (0, 1]")
        if self.patch < 4 or self.patch % 2 or self.n % self.patch:
            raise ConfigError(f"grid {self.n} is not divisible into even patches of {self.patch}")
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if self.exec_mode not in ("fine", "fused"):
            raise ConfigError(f"exec_mode must be fine or fused, not {self.exec_mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def domain(self):
        if self.case == "implosion":
            return cases.IMPLOSION_DOMAIN
        if self.case == "shear_layer":
            return cases.SHEAR_DOMAIN
        if self.case == "sod_1d":
            return (0.0, 1.0), (0.0, self.patch / self.n)
        return cases.UNIT_DOMAIN

    @property
    def periodic(self) -> bool:
        return self.case != "sod_1d"

    @property
    def roots(self) -> tuple[int, int]:
        r = self.n // self.patch
        return (r, 1) if self.case == "sod_1d" else (r, r)

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(self.scheme, self.weno_eps, self.characteristic)

    def executor_config(self) -> ExecutorConfig:
        return ExecutorConfig(self.exec_mode, self.workers, self.injected_overhead)

    def shear_params(self) -> cases.ShearLayerParams:
        return cases.ShearLayerParams(self.density_ratio, self.convective_mach, self.wavenumber,
                                      self.perturb_amp, self.shear_thickness,
                                      invert_ratio=self.invert_ratio)


def _coerce(name: str, raw):
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    if name not in ftype:
        raise ConfigError(f"unknown configuration key {name!r}")
    kind = ftype[name]
    if not isinstance(raw, str):
        return raw
    try:
        if kind == "bool":
            if raw.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return raw.lower() in ("1", "true", "yes", "on")
        if kind == "int":
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for k, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {k}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _coerce(key, val)
    return out


def make_config(base: dict | None = None, **overrides) -> RunConfig:
    values = {}
    for src in (base or {}), overrides:
        for k, v in src.items():
            if v is not None:
                values[k] = _coerce(k, v)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class RunResult:
    status: int
    t: float
    steps: int
    report: ExecReport
    totals0: np.ndarray
    totals: np.ndarray
    snapshots: list[Path] = field(default_factory=list)
    max_symmetry_error: float = 0.0
    regrids: int = 0
    sod_l1: float | None = None
    sod_overshoot: float | None = None

    @property
    def conservation_drift(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.totals0), 1e-300)
        return np.abs(self.totals - self.totals0) / scale


class Simulation:
    """Mesh, fields and stepper for one configured case."""

    def __init__(self, cfg: RunConfig, executor: Executor | None = None):
        self.cfg = cfg
        self.gas = GasModel(cfg.gamma, cfg.gas_constant)
        rx, ry = cfg.roots
        cap = cfg.capacity or (rx * ry * (4 ** (cfg.max_level + 1)) if cfg.amr else rx * ry)
        self.mesh = Mesh(rx, ry, max(cap, rx * ry), cfg.periodic)
        self.store = FieldStore(self.mesh, cfg.patch, cfg.domain)
        self.executor = executor or Executor(cfg.executor_config())
        self._own = executor is None
        self.stepper = Stepper(self.store, self.mesh, self.gas, cfg.scheme_config(), self.executor)
        self.t = 0.0
        self.steps = 0
        self.regrids = 0
        self.initialize()

    def close(self):
        if self._own:
            self.executor.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def initialize(self) -> None:
        c, g, st, m = self.cfg, self.gas, self.store, self.mesh
        init = {
            "implosion": lambda: cases.init_implosion(st, m, g),
            "shear_layer": lambda: cases.init_shear_layer(st, m, g, c.shear_params()),
            "entropy_wave": lambda: cases.init_entropy_wave(st, m, g),
            "sod_1d": lambda: cases.init_sod(st, m, g),
        }[c.case]
        init()
        self.stepper.synchronize(0)
        if c.amr:
            # refine the initial data level by level, re-sampling the exact IC
            for _ in range(c.max_level):
                if not self.regrid():
                    break
                init()
                self.stepper.synchronize(0)

    def regrid(self) -> bool:
        """Tag, refine, coarsen and re-validate; returns True if the mesh changed."""
        c, m, st = self.cfg, self.mesh, self.store
        self.stepper.synchronize(0)
        cases.tag_patches(st, m, c.tag_threshold, c.max_level)
        created = m.refinement_pass(c.max_level)
        st.sync(m)
        done = set()
        for p in created:
            parent = m.meta[p].parent
            if parent not in done:
                prolong_to_children(st, m, parent)
                done.add(parent)
        removed = m.coarsening_pass()
        st.sync(m)
        bad = m.validate()
        if bad:
            raise MeshError(f"mesh invalid after regrid: {bad[:3]}")
        changed = bool(created or removed)
        if changed:
            self.regrids += 1
            self.stepper.synchronize(0)
        return changed

    def advance(self, dt: float) -> None:
        self.stepper.step(dt)
        self.t += dt
        self.steps += 1

    def next_dt(self, t_end: float) -> float:
        dt = compute_dt(self.store, self.mesh, self.gas, self.cfg.cfl)
        remaining = t_end - self.t
        if remaining < dt * (1.0 + 1e-12):
            dt = remaining
        return dt

    def snapshot(self, out: Path, tag: str) -> list[Path]:
        self.stepper.synchronize(0)
        paths = []
        for fmt in [f.strip() for f in self.cfg.formats.split(",") if f.strip()]:
            ext = {"vtk": "vtk", "csv": "csv", "pgm": "pgm", "schlieren": "pgm"}[fmt]
            name = f"{self.cfg.case}_{tag}"
            if fmt == "schlieren":
                paths.append(self.write_schlieren(out / f"{name}_schlieren.{ext}"))
            else:
                paths.extend(write_snapshot(self.store, self.mesh, out / f"{name}.{ext}", fmt,
                                            self.gas))
        return paths

    def write_schlieren(self, path: Path) -> Path:
        self.stepper.synchronize(0)
        s = cases.schlieren(self.store, self.mesh, self.cfg.schlieren_k)
        nx, ny = self.store.global_nodes(0)
        img = np.ones((nx, ny))
        for p, arr in s.items():
            pf = self.store[p]
            if pf.level == 0:
                img[pf.origin[0]:pf.origin[0] + pf.n, pf.origin[1]:pf.origin[1] + pf.n] = arr
            else:  # sample refined leaves at coinciding level-0 nodes
                f = 1 << pf.level
                ox, oy = pf.origin
                sx = slice((-ox) % f, pf.n, f)
                sy = slice((-oy) % f, pf.n, f)
                sub = arr[sx, sy]
                gx = (ox + sx.start) // f
                gy = (oy + sy.start) // f
                img[gx:gx + sub.shape[0], gy:gy + sub.shape[1]] = sub
        return write_pgm(img, path, 0.0, 1.0)


def run_simulation(cfg: RunConfig, executor: Executor | None = None) -> RunResult:
    """Advance ``cfg.case`` to ``cfg.t_end`` and write the requested snapshots."""
    out = Path(cfg.out) if cfg.out else None
    with Simulation(cfg, executor) as sim:
        totals0 = conserved_totals(sim.store, sim.mesh)
        snaps: list[Path] = []
        sym = 0.0

        def checkpoint(tag):
            nonlocal sym
            if cfg.check_symmetry:
                sym = max(sym, *cases.symmetry_errors(sim.store, sim.mesh))
            if out is not None:
                snaps.extend(sim.snapshot(out, tag))

        checkpoint(f"{0:06d}")
        while sim.t < cfg.t_end and sim.steps < cfg.max_steps:
            dt = sim.next_dt(cfg.t_end)
            if dt <= 0.0:
                break
            sim.advance(dt)
            if cfg.amr and sim.steps % cfg.regrid_every == 0:
                sim.regrid()
            if cfg.output_every and sim.steps % cfg.output_every == 0:
                checkpoint(f"{sim.steps:06d}")
        if not (cfg.output_every and sim.steps % cfg.output_every == 0) and sim.steps > 0:
            checkpoint(f"{sim.steps:06d}")
        log.info("%s: %d steps to t=%.6g", cfg.case, sim.steps, sim.t)
        res = RunResult(0, sim.t, sim.steps, sim.stepper.report, totals0,
                        conserved_totals(sim.store, sim.mesh), snaps, sym, sim.regrids)
        if cfg.case == "sod_1d" and sim.t > 0.0:
            res.sod_l1, res.sod_overshoot = sod_errors(sim)
        return res


def sod_errors(sim: Simulation) -> tuple[float, float]:
    """L1 density error against the exact solution, and the relative overshoot.

    The overshoot is the largest excursion of rho above rho_L or below rho_R,
    relative to the jump rho_L - rho_R.
    """
    from .riemann import sample
    prims, _ = level_primitives(sim.store, sim.mesh, 0, sim.gas)
    rho = prims["rho"][:, 0]
    nx = rho.size
    dx, _ = sim.store.spacing(0)
    x = 0.5 + (np.arange(nx) - 0.5 * nx) * dx
    exact, _, _ = sample(cases.SOD_LEFT, cases.SOD_RIGHT, (x - 0.5) / sim.t, sim.gas.gamma)
    l1 = float(np.sum(np.abs(rho - exact)) * dx)
    hi, lo = cases.SOD_LEFT[0], cases.SOD_RIGHT[0]
    over = max(float(rho.max()) - hi, lo - float(rho.min()), 0.0) / (hi - lo)
    return l1, over


def convective_time(cfg: RunConfig) -> float:
    """L_x / (U1 - U2): time for the two streams to slide one domain length past each other."""
    g = GasModel(cfg.gamma, cfg.gas_constant)
    U = cfg.shear_params().stream_velocity(g)
    (x0, x1), _ = cfg.domain
    return (x1 - x0) / (2.0 * U)


__all__ = ["RunConfig", "RunResult", "Simulation", "run_simulation", "make_config",
           "parse_config_text", "sod_errors", "convective_time"]
