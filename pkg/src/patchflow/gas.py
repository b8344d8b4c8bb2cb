"""Calorically perfect gas: conversions between conservative and primitive states.

All functions accept scalars or numpy arrays of matching shape; a state stacked
as an array of shape ``(4, ...)`` converts with ``Conservative(*arr)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NonPositiveDensity, NonPositivePressure, NonPositiveState


@dataclass(frozen=True)
class GasModel:
    gamma: float = 1.4
    gas_constant: float = 1.0  # kept for completeness; the flux path never uses it

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if not self.gas_constant > 0.0:
            raise ValueError(f"gas_constant must be > 0, got {self.gas_constant}")


class Conservative(NamedTuple):
    mass: float | np.ndarray
    mmtx: float | np.ndarray
    mmty: float | np.ndarray
    enrg: float | np.ndarray


class Primitive(NamedTuple):
    rho: float | np.ndarray
    u: float | np.ndarray
    v: float | np.ndarray
    p: float | np.ndarray


def _check_positive(rho, p):
    if np.any(~(np.asarray(rho) > 0.0)):
        raise NonPositiveDensity(f"non-positive density: min={np.min(rho)!r}")
    if np.any(~(np.asarray(p) > 0.0)):
        raise NonPositivePressure(f"non-positive pressure: min={np.min(p)!r}")


def cons_to_prim(U: Conservative, g: GasModel) -> Primitive:
    rho, mx, my, E = U
    if np.any(~(np.asarray(rho) > 0.0)):
        raise NonPositiveDensity(f"non-positive density: min={np.min(rho)!r}")
    u = mx / rho
    v = my / rho
    # p = rho * e_th * (gamma - 1) with e_th = e - |u|^2/2
    p = (g.gamma - 1.0) * (E - 0.5 * (mx * u + my * v))
    if np.any(~(np.asarray(p) > 0.0)):
        raise NonPositivePressure(f"non-positive pressure: min={np.min(p)!r}")
    return Primitive(rho, u, v, p)


def prim_to_cons(W: Primitive, g: GasModel) -> Conservative:
    rho, u, v, p = W
    _check_positive(rho, p)
    E = p / (g.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    return Conservative(rho, rho * u, rho * v, E)


def sound_speed(W: Primitive, g: GasModel):
    rho, p = W.rho, W.p
    if np.any(~(np.asarray(rho) > 0.0)) or np.any(~(np.asarray(p) > 0.0)):
        raise NonPositiveState("sound speed needs rho > 0 and p > 0")
    return np.sqrt(g.gamma * p / rho)


def total_enthalpy(W: Primitive, g: GasModel):
    """Specific total enthalpy h = e + p/rho."""
    rho, u, v, p = W
    if np.any(~(np.asarray(rho) > 0.0)):
        raise NonPositiveDensity("total enthalpy needs rho > 0")
    e = p / ((g.gamma - 1.0) * rho) + 0.5 * (u * u + v * v)
    return e + p / rho
