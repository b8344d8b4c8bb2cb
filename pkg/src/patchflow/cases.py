"""Initial conditions, diagnostics and the default refinement tagger."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FieldStore
from .gas import GasModel
from .mesh import Mesh

IMPLOSION_DOMAIN = ((-0.3, 0.3), (-0.3, 0.3))
SHEAR_DOMAIN = ((-0.3, 0.3), (-0.3, 0.3))
UNIT_DOMAIN = ((0.0, 1.0), (0.0, 1.0))

SOD_LEFT = (1.0, 0.0, 1.0)  # (rho, u, p)
SOD_RIGHT = (0.125, 0.0, 0.1)


def _cons(g: GasModel, rho, u, v, p):
    return np.array([rho, rho * u, rho * v, p / (g.gamma - 1.0) + 0.5 * rho * (u * u + v * v)])


def _fill_all(store: FieldStore, m: Mesh, fn) -> None:
    for p in m.active_ids():
        store.fill_interior(p, fn)


# -- implosion -----------------------------------------------------------------

def implosion_state(X, Y):
    """(rho, p) of the diamond implosion; nodes on the diamond edge get the outer state."""
    # the small relative margin keeps nodes that lie on |x|+|y| = 0.15 up to
    # rounding on the outer branch
    inside = np.abs(X) + np.abs(Y) < 0.15 * (1.0 - 1e-12)
    rho = np.where(inside, 0.125, 1.0)
    p = np.where(inside, 0.140, 1.0)
    return rho, p


def init_implosion(store: FieldStore, m: Mesh, g: GasModel) -> None:
    def fn(X, Y):
        rho, p = implosion_state(X, Y)
        zero = np.zeros_like(X)
        return _cons(g, rho, zero, zero, p)
    _fill_all(store, m, fn)


# -- shear layer -----------------------------------------------------------------

@dataclass(frozen=True)
class ShearLayerParams:
    density_ratio: float = 2.0      # rho_region1 / rho_region2
    convective_mach: float = 0.7
    wavenumber: int = 5
    perturb_amp: float = 0.05       # as a fraction of the stream velocity U
    shear_thickness: float = 0.01   # L_y / 60 on the default domain
    rho1: float = 1.0
    pressure: float = 1.0
    interface_y: float = 0.15
    invert_ratio: bool = False      # if set, rho2 / rho1 = density_ratio

    def __post_init__(self):
        if not self.density_ratio > 0 or not self.convective_mach > 0 or self.wavenumber < 1:
            raise ValueError("invalid shear layer parameters")

    def densities(self) -> tuple[float, float]:
        if self.invert_ratio:
            return self.rho1, self.rho1 * self.density_ratio
        return self.rho1, self.rho1 / self.density_ratio

    def stream_velocity(self, g: GasModel) -> float:
        """U with M_c = 2U / (c1 + c2)."""
        r1, r2 = self.densities()
        c1 = np.sqrt(g.gamma * self.pressure / r1)
        c2 = np.sqrt(g.gamma * self.pressure / r2)
        return 0.5 * self.convective_mach * (c1 + c2)


def shear_layer_state(X, Y, g: GasModel, params: ShearLayerParams, lx: float = 0.6):
    r1, r2 = params.densities()
    U = params.stream_velocity(g)
    d = params.shear_thickness
    yi = params.interface_y
    s = 0.5 * (np.tanh((Y + yi) / d) - np.tanh((Y - yi) / d))  # 1 in region 1, 0 outside
    rho = r2 + (r1 - r2) * s
    u = -U + 2.0 * U * s
    bump = np.exp(-((Y - yi) / d) ** 2) + np.exp(-((Y + yi) / d) ** 2)
    v = params.perturb_amp * U * np.sin(2.0 * np.pi * params.wavenumber * X / lx) * bump
    p = np.full_like(X, params.pressure)
    return rho, u, v, p


def init_shear_layer(store: FieldStore, m: Mesh, g: GasModel,
                     params: ShearLayerParams = ShearLayerParams()) -> None:
    lx = store.bounds[0][1] - store.bounds[0][0]
    _fill_all(store, m, lambda X, Y: _cons(g, *shear_layer_state(X, Y, g, params, lx)))


# -- verification cases -----------------------------------------------------------

def entropy_wave_state(X, Y, t=0.0, amp=0.2):
    rho = 1.0 + amp * np.sin(2.0 * np.pi * (X + Y - 2.0 * t))
    one = np.ones_like(X)
    return rho, one, one, one


def init_entropy_wave(store: FieldStore, m: Mesh, g: GasModel, t: float = 0.0) -> None:
    _fill_all(store, m, lambda X, Y: _cons(g, *entropy_wave_state(X, Y, t)))


def init_sod(store: FieldStore, m: Mesh, g: GasModel, x0: float = 0.5) -> None:
    def fn(X, Y):
        left = X < x0
        rho = np.where(left, SOD_LEFT[0], SOD_RIGHT[0])
        u = np.where(left, SOD_LEFT[1], SOD_RIGHT[1])
        p = np.where(left, SOD_LEFT[2], SOD_RIGHT[2])
        return _cons(g, rho, u, np.zeros_like(X), p)
    _fill_all(store, m, fn)


# -- diagnostics ------------------------------------------------------------------

def density_gradient(store: FieldStore, pid: int, buf: int = 0) -> np.ndarray:
    """|grad rho| at interior nodes by 2nd-order central differences (ghosts required)."""
    pf = store[pid]
    ng, n = pf.ng, pf.n
    r = pf.u[buf][0]
    gx = (r[ng + 1:ng + n + 1, ng:ng + n] - r[ng - 1:ng + n - 1, ng:ng + n]) / (2.0 * pf.dx)
    gy = (r[ng:ng + n, ng + 1:ng + n + 1] - r[ng:ng + n, ng - 1:ng + n - 1]) / (2.0 * pf.dy)
    return np.hypot(gx, gy)


def schlieren(store: FieldStore, m: Mesh, k: float = 15.0, buf: int = 0) -> dict[int, np.ndarray]:
    """Numerical Schlieren s = exp(-k |grad rho| / max |grad rho|) per leaf patch."""
    grads = {p: density_gradient(store, p, buf) for p in m.leaves()}
    gmax = max((g.max() for g in grads.values()), default=0.0)
    if gmax <= 0.0:
        return {p: np.ones_like(g) for p, g in grads.items()}
    return {p: np.exp(-k * g / gmax) for p, g in grads.items()}


def tag_patches(store: FieldStore, m: Mesh, threshold: float, max_level: int,
                buf: int = 0) -> tuple[int, int]:
    """Set refinement/coarsening requests from max |grad rho| * dx per patch.

    Leaves above ``threshold`` below ``max_level`` request refinement. A refined
    patch requests coarsening when it and all its (leaf) children fall below
    ``threshold / 4``. Returns the number of (refine, coarsen) flags set.
    """
    indicator = {p: float(density_gradient(store, p, buf).max()) * store[p].dx
                 for p in m.active_ids()}
    nref = ncoa = 0
    for p, val in indicator.items():
        meta = m.meta[p]
        if not meta.has_children:
            if val > threshold and meta.level < max_level:
                meta.refine_req = True
                nref += 1
        elif val < 0.25 * threshold and all(
                not m.meta[c].has_children and indicator[c] < 0.25 * threshold
                for c in meta.child):
            meta.coarsen_req = True
            ncoa += 1
    return nref, ncoa


def symmetry_errors(store: FieldStore, m: Mesh, buf: int = 0) -> tuple[float, float]:
    """max |rho(x,y) - rho(y,x)| and max |rho(x,y) - rho(-x,-y)| on level 0.

    Assumes a square domain symmetric about the origin and vertex-centred nodes,
    where node I mirrors to node (N - I) mod N.
    """
    from .fields import gather_level
    arr, _ = gather_level(store, m, 0, buf)
    r = arr[0]
    flip = np.roll(r[::-1, ::-1], 1, axis=(0, 1))
    return float(np.abs(r - r.T).max()), float(np.abs(r - flip).max())


def perturbation_energy(store: FieldStore, m: Mesh, buf: int = 0) -> float:
    """Integral of rho v^2 / 2 over the leaves."""
    tot = 0.0
    for p in m.leaves():
        pf = store[p]
        U = pf.interior(pf.u[buf])
        tot += float((0.5 * U[2] ** 2 / U[0]).sum()) * pf.dx * pf.dy
    return tot
