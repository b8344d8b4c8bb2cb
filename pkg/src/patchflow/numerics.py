"""Spatial discretization on staggered edges.

Conservative variables live at nodes; fluxes are assembled at the edge
midpoints of each axis and differenced back to the nodes with a 4th-order
staggered difference. Two edge-flux schemes are available:

``central4``
    4th-order midpoint interpolation of (rho, u, v, p), then the exact Euler
    flux of the interpolated state. For shock-free flows.
``weno5``
    Left/right-biased WENO5-JS interpolation (characteristic or component-wise
    variables) followed by the Rusanov flux.

The one-dimensional helpers in this module are reference implementations on
plain arrays; the per-patch work runs in compiled kernels (``_kernels``).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import InsufficientStencil, NonFiniteInput, NonPositiveState
from .gas import Conservative, GasModel, Primitive, cons_to_prim, total_enthalpy

X, Y = 0, 1

# momentum component (normal, tangential) for each sweep axis
_ROT = {X: (1, 2), Y: (2, 1)}


class Scheme(str, Enum):
    CENTRAL4 = "central4"
    WENO5 = "weno5"


@dataclass(frozen=True)
class SchemeConfig:
    mode: Scheme = Scheme.WENO5
    weno_epsilon: float = 1e-6
    characteristic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", Scheme(self.mode))
        if not self.weno_epsilon > 0.0:
            raise ValueError("weno_epsilon must be positive")


class EdgeState(NamedTuple):
    UL: Conservative
    UR: Conservative


class EigenSystem(NamedTuple):
    L: np.ndarray
    Rm: np.ndarray
    lam: np.ndarray


# -- one-dimensional reference operators ------------------------------------

def central_interp_to_edges(phi) -> np.ndarray:
    """Midpoint values phi_{i+1/2} for i = 1 .. len(phi) - 3.

    phi_{i+1/2} = 9/16 (phi_i + phi_{i+1}) - 1/16 (phi_{i-1} + phi_{i+2})
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] < 4:
        raise InsufficientStencil("central interpolation needs at least 4 nodes")
    a, b, c, d = phi[..., :-3], phi[..., 1:-2], phi[..., 2:-1], phi[..., 3:]
    return K.C9_16 * (b + c) - K.C1_16 * (a + d)


def staggered_divergence(f, dx: float) -> np.ndarray:
    """Node derivatives from edge values f_{k+1/2}; returns len(f) - 3 nodes.

    Output node k sits between edges k+1 and k+2 of the input.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[-1] < 4:
        raise InsufficientStencil("staggered divergence needs at least 4 edges")
    return (K.C9_8 * (f[..., 2:-1] - f[..., 1:-2]) - K.C1_24 * (f[..., 3:] - f[..., :-3])) / dx


def weno5_weights(phi, eps: float = 1e-6, bias: str = "left") -> tuple[float, float, float]:
    v = _weno_stencil(phi, bias)
    return K.weno5_weights(*v, eps)


def weno5_interp(phi, eps: float = 1e-6, bias: str = "left") -> float:
    """WENO5-JS value at the midpoint of a five-node stencil.

    ``left`` interpolates between the 3rd and 4th node, ``right`` between the
    2nd and 3rd (the mirror image).
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    return K.weno5_left(*_weno_stencil(phi, bias), eps)


def _weno_stencil(phi, bias):
    v = [float(x) for x in phi]
    if len(v) != 5:
        raise InsufficientStencil("WENO5 needs exactly five values")
    if not all(np.isfinite(v)):
        raise NonFiniteInput(f"non-finite WENO input {v}")
    if bias == "left":
        return v
    if bias == "right":
        return v[::-1]
    raise ValueError(f"bias must be 'left' or 'right', not {bias!r}")


def euler_flux(W: Primitive, g: GasModel, axis: int) -> np.ndarray:
    rho, u, v, p = (np.asarray(x, dtype=float) for x in W)
    un = u if axis == X else v
    h = total_enthalpy(Primitive(rho, u, v, p), g)
    return np.array([rho * un,
                     rho * u * un + (p if axis == X else 0.0),
                     rho * v * un + (p if axis == Y else 0.0),
                     rho * h * un])


def rusanov_flux(edge: EdgeState, g: GasModel, axis: int) -> np.ndarray:
    """F = (F(UL) + F(UR))/2 - S (UR - UL)/2, S = max(c + |u_n|) of both sides."""
    UL, UR = edge
    try:
        WL = cons_to_prim(Conservative(*UL), g)
        WR = cons_to_prim(Conservative(*UR), g)
    except NonPositiveState as exc:
        raise NonPositiveState(f"Rusanov flux on invalid edge state: {exc}") from exc
    unl = WL.u if axis == X else WL.v
    unr = WR.u if axis == X else WR.v
    cl = np.sqrt(g.gamma * WL.p / WL.rho)
    cr = np.sqrt(g.gamma * WR.p / WR.rho)
    s = np.maximum(cr + np.abs(unr), cl + np.abs(unl))
    fl = euler_flux(WL, g, axis)
    fr = euler_flux(WR, g, axis)
    return 0.5 * (fl + fr) - 0.5 * s * (np.asarray(UR, dtype=float) - np.asarray(UL, dtype=float))


def eigen_system(WL: Primitive, WR: Primitive, g: GasModel, axis: int) -> EigenSystem:
    """Eigen-decomposition of the flux Jacobian at the averaged primitive state."""
    for Wx in (WL, WR):
        if not (Wx.rho > 0.0 and Wx.p > 0.0):
            raise NonPositiveState(f"eigen system needs a positive state, got {Wx}")
    rho = 0.5 * (WL.rho + WR.rho)
    u = 0.5 * (WL.u + WR.u)
    v = 0.5 * (WL.v + WR.v)
    p = 0.5 * (WL.p + WR.p)
    inrm, itan = _ROT[axis]
    un, ut = (u, v) if axis == X else (v, u)
    Lr = np.empty((4, 4))
    Rr = np.empty((4, 4))
    c = K.eigen_rotated(rho, un, ut, p, g.gamma, Lr, Rr)
    perm = [0, inrm, itan, 3]  # rotated slot -> original component
    L = np.empty((4, 4))
    R = np.empty((4, 4))
    L[:, perm] = Lr
    R[perm, :] = Rr
    return EigenSystem(L, R, np.array([un - c, un, un, un + c]))


# -- per-patch kernels --------------------------------------------------------

def _views(pf, arr, axis):
    """Sweep-local view of a (4, m, m) array: transpose for the y axis."""
    return arr if axis == X else arr.transpose(0, 2, 1)


def kernel_primitive(pf, src, gas):
    bad = K.to_primitive(pf.u[src], pf.w, gas.gamma)
    if bad >= 0:
        m = pf.u[src].shape[2]
        node = (bad // m - pf.ng, bad % m - pf.ng)
        err = NonPositiveState(f"patch {pf.pid}: non-positive state at local node {node}")
        err.node = node
        raise err


def kernel_interp(pf, src, gas, scheme, axis):
    inrm, itan = _ROT[axis]
    u = _views(pf, pf.u[src], axis)
    w = _views(pf, pf.w, axis)
    if scheme.mode is Scheme.CENTRAL4:
        K.interp_central(w, pf.ng, pf.n, inrm, itan, pf.edge_l[axis])
    else:
        K.interp_weno(u, w, pf.ng, pf.n, gas.gamma, scheme.weno_epsilon,
                      scheme.characteristic, inrm, itan, pf.edge_l[axis], pf.edge_r[axis])


def kernel_flux(pf, gas, scheme, axis):
    inrm, itan = _ROT[axis]
    if scheme.mode is Scheme.CENTRAL4:
        K.flux_central(pf.edge_l[axis], gas.gamma, pf.n, inrm, itan, pf.flux[axis])
        return
    bad = K.flux_rusanov(pf.edge_l[axis], pf.edge_r[axis], gas.gamma, pf.n, inrm, itan,
                         pf.flux[axis])
    if bad >= 0:
        raise NonPositiveState(
            f"patch {pf.pid}: non-positive WENO edge state on axis {'xy'[axis]}, "
            f"edge {bad // pf.n - 2}+1/2, row {bad % pf.n}")


def kernel_divergence(pf, axis):
    inv = 1.0 / (pf.dx if axis == X else pf.dy)
    K.divergence(pf.flux[axis], pf.ng, pf.n, inv, _views(pf, pf.rhs, axis), axis == Y)


def rhs_kernels(gas: GasModel, scheme: SchemeConfig):
    """Ordered (name, fn(pf, src)) list computing pf.rhs from buffer ``src``."""
    return [
        ("primitive", lambda pf, src: kernel_primitive(pf, src, gas)),
        ("interp-x", lambda pf, src: kernel_interp(pf, src, gas, scheme, X)),
        ("flux-x", lambda pf, src: kernel_flux(pf, gas, scheme, X)),
        ("interp-y", lambda pf, src: kernel_interp(pf, src, gas, scheme, Y)),
        ("flux-y", lambda pf, src: kernel_flux(pf, gas, scheme, Y)),
        ("divergence-x", lambda pf, src: kernel_divergence(pf, X)),
        ("divergence-y", lambda pf, src: kernel_divergence(pf, Y)),
    ]


def compute_rhs(store, m, g: GasModel, cfg: SchemeConfig, p: int, src: int = 0) -> np.ndarray:
    """Right-hand side -div(F) at the interior nodes of patch ``p``.

    Ghosts of buffer ``src`` must be current. Returns a copy of shape (4, n, n).
    """
    pf = store[p]
    for _, fn in rhs_kernels(g, cfg):
        fn(pf, src)
    return pf.interior(pf.rhs).copy()


def weno_weight_deviation(store, m, g: GasModel, cfg: SchemeConfig, src: int = 0) -> float:
    """Largest deviation of WENO weights from the ideal weights over all leaves."""
    worst = 0.0
    for p in m.leaves():
        pf = store[p]
        kernel_primitive(pf, src, g)
        for axis in (X, Y):
            inrm, itan = _ROT[axis]
            worst = max(worst, K.weno_weight_deviation(
                _views(pf, pf.u[src], axis), _views(pf, pf.w, axis), pf.ng, pf.n, g.gamma,
                cfg.weno_epsilon, cfg.characteristic, inrm, itan))
    return worst
