"""Block-structured AMR solver for the 2D compressible Euler equations."""
from .errors import (CapacityExceeded, ConfigError, MeshError, NonPositiveDensity,
                     NonPositivePressure, NonPositiveState, PatchflowError, SolverBlowup)
from .gas import Conservative, GasModel, Primitive, cons_to_prim, prim_to_cons, sound_speed, \
    total_enthalpy
from .mesh import Mesh, init_mesh
from .numerics import Scheme, SchemeConfig
from .executor import ExecMode, Executor, ExecutorConfig
from .fields import FieldStore
from .driver import RunConfig, run_simulation

__version__ = "0.1.0"

__all__ = [
    "CapacityExceeded", "ConfigError", "MeshError", "NonPositiveDensity", "NonPositivePressure",
    "NonPositiveState", "PatchflowError", "SolverBlowup", "Conservative", "GasModel", "Primitive",
    "cons_to_prim", "prim_to_cons", "sound_speed", "total_enthalpy", "Mesh", "init_mesh",
    "Scheme", "SchemeConfig", "ExecMode", "Executor", "ExecutorConfig", "FieldStore",
    "RunConfig", "run_simulation",
]
