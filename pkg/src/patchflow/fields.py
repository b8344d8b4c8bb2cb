"""Per-patch node data with ghost layers, halo exchange and level transfer.

A patch holds ``n x n`` interior nodes and ``ng`` ghost nodes on every side.
Arrays are indexed ``[var, ix, iy]`` in storage coordinates: logical node
``(i, j)`` with ``-ng <= i, j < n + ng`` lives at ``[:, i + ng, j + ng]``.

Nodes are vertex-centred: global node ``I`` of level ``L`` sits at
``x_min + I * dx_L`` with ``dx_{L+1} = dx_L / 2``, so fine node ``2K`` coincides
with coarse node ``K``. Coarse-to-fine transfer injects at coinciding nodes and
uses centred 4-point Lagrange interpolation in between, per axis.
"""
from __future__ import annotations

from functools import lru_cache, partial

import numpy as np

from .errors import InsufficientStencil, MissingNeighbor, NoChildren
from .mesh import NULL, OFFSETS, QUADRANT_OFFSETS, Mesh

NG = 4
NVARS = 3  # stage buffers u0, u1, u2


class PatchField:
    """Conservative data of one patch plus the scratch arrays of the RHS pipeline."""

    def __init__(self, pid: int, n: int, ng: int, level: int, origin: tuple[int, int],
                 dx: float, dy: float):
        m = n + 2 * ng
        self.pid = pid
        self.n = n
        self.ng = ng
        self.level = level
        self.origin = origin  # global node index of interior node (0, 0)
        self.dx = dx
        self.dy = dy
        self.u = [np.zeros((4, m, m)) for _ in range(NVARS)]
        self.w = np.zeros((4, m, m))
        self.rhs = np.zeros((4, m, m))
        self.edge_l = [np.zeros((4, n + 3, n)) for _ in range(2)]
        self.edge_r = [np.zeros((4, n + 3, n)) for _ in range(2)]
        self.flux = [np.zeros((4, n + 3, n)) for _ in range(2)]

    @property
    def interior_slice(self):
        ng, n = self.ng, self.n
        return (slice(None), slice(ng, ng + n), slice(ng, ng + n))

    def interior(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.interior_slice]

    @property
    def data(self) -> np.ndarray:
        return self.u[0]


class FieldStore:
    """Field slots indexed by patch id, kept in step with a :class:`Mesh`."""

    def __init__(self, mesh: Mesh, n: int, bounds=((0.0, 1.0), (0.0, 1.0)), ng: int = NG):
        if n < ng or n % 2:
            raise ValueError(f"patch size must be even and >= {ng}, got {n}")
        self.n = n
        self.ng = ng
        self.bounds = tuple(tuple(float(v) for v in b) for b in bounds)
        self.roots = (mesh.roots_nx, mesh.roots_ny)
        self.slots: list[PatchField | None] = [None] * mesh.num_patches_max
        self.generation = 0  # bumped whenever a slot is (re)allocated or dropped
        self.sync(mesh)

    def __getitem__(self, pid: int) -> PatchField:
        pf = self.slots[pid]
        if pf is None:
            raise KeyError(f"no field allocated for patch {pid}")
        return pf

    def spacing(self, level: int) -> tuple[float, float]:
        (x0, x1), (y0, y1) = self.bounds
        nx, ny = self.global_nodes(level)
        return (x1 - x0) / nx, (y1 - y0) / ny

    def global_nodes(self, level: int) -> tuple[int, int]:
        return (self.roots[0] * self.n) << level, (self.roots[1] * self.n) << level

    def allocate(self, mesh: Mesh, pid: int) -> PatchField:
        meta = mesh.meta[pid]
        dx, dy = self.spacing(meta.level)
        pf = PatchField(pid, self.n, self.ng, meta.level,
                        (meta.origin[0] * self.n, meta.origin[1] * self.n), dx, dy)
        self.slots[pid] = pf
        self.generation += 1
        return pf

    def sync(self, mesh: Mesh) -> list[int]:
        """Allocate fields of newly active patches and drop those of removed ones."""
        new = []
        for pid, meta in enumerate(mesh.meta):
            pf = self.slots[pid]
            if meta.active and (pf is None or pf.level != meta.level
                                or pf.origin != (meta.origin[0] * self.n, meta.origin[1] * self.n)):
                self.allocate(mesh, pid)
                new.append(pid)
            elif not meta.active and pf is not None:
                self.slots[pid] = None
                self.generation += 1
        return new

    def coords(self, pid: int, ghosts: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates of a patch along x and y.

        Computed as ``centre + (I - N/2) * dx`` so that mirrored nodes of a
        domain symmetric about its centre get exactly negated coordinates.
        """
        pf = self[pid]
        lo = -pf.ng if ghosts else 0
        hi = pf.n + pf.ng if ghosts else pf.n
        idx = np.arange(lo, hi)
        out = []
        for axis in (0, 1):
            a, b = self.bounds[axis]
            nn = self.global_nodes(pf.level)[axis]
            d = pf.dx if axis == 0 else pf.dy
            gi = pf.origin[axis] + idx
            out.append(0.5 * (a + b) + (gi - 0.5 * nn) * d)
        return out[0], out[1]

    def fill_interior(self, pid: int, fn, buf: int = 0) -> None:
        """Set the interior from ``fn(X, Y) -> array (4, n, n)`` of conservative values."""
        x, y = self.coords(pid)
        X, Y = np.meshgrid(x, y, indexing="ij")
        pf = self[pid]
        pf.interior(pf.u[buf])[...] = fn(X, Y)


# -- ghost filling ------------------------------------------------------------

def _axis_ranges(off: int, n: int, ng: int):
    """(destination, same-level source) storage ranges along one axis."""
    if off < 0:
        return (0, ng), (n, n + ng)
    if off > 0:
        return (ng + n, n + 2 * ng), (ng, 2 * ng)
    return (ng, ng + n), (ng, ng + n)


@lru_cache(maxsize=None)
def _interp_index(lo: int, hi: int, rel: int, ng: int, m: int) -> tuple[np.ndarray, ...]:
    """Parent storage indices (a, b, c, d) for fine logical nodes lo..hi-1 of a child.

    ``rel`` is the child's node origin minus twice the parent's node origin. A
    fine node between parent nodes b and c takes the cubic midpoint value
    ``(b + c)/2 + ((b + c) - (a + d))/16``; a coinciding node uses a = b = c = d,
    which reproduces the parent value exactly.
    """
    idx = np.empty((4, hi - lo), dtype=np.intp)
    for r, l in enumerate(range(lo, hi)):
        I = rel + l
        if I % 2 == 0:
            idx[:, r] = I // 2 + ng
        else:
            s = (I - 1) // 2 + ng
            idx[:, r] = (s - 1, s, s + 1, s + 2)
    if idx.min() < 0 or idx.max() >= m:
        raise InsufficientStencil(f"fine nodes {lo}..{hi - 1} need parent nodes outside [0, {m})")
    return tuple(idx)


def _midpoint(A: np.ndarray, idx, axis: int) -> np.ndarray:
    a, b, c, d = (np.take(A, i, axis=axis) for i in idx)
    bc = b + c
    return 0.5 * bc + 0.0625 * (bc - (a + d))


def _interp_from_parent(parent: PatchField, child: PatchField, buf: int,
                        xr: tuple[int, int], yr: tuple[int, int]) -> None:
    """Interpolate child storage block xr x yr from the parent's full array."""
    ng = child.ng
    m = parent.u[buf].shape[1]
    relx = child.origin[0] - 2 * parent.origin[0]
    rely = child.origin[1] - 2 * parent.origin[1]
    ix = _interp_index(xr[0] - ng, xr[1] - ng, relx, ng, m)
    iy = _interp_index(yr[0] - ng, yr[1] - ng, rely, ng, m)
    # only the parent rows the x pass touches are needed for the y pass
    lo, hi = min(i.min() for i in iy), max(i.max() for i in iy) + 1
    tmp = _midpoint(parent.u[buf][:, :, lo:hi], ix, 1)
    child.u[buf][:, xr[0]:xr[1], yr[0]:yr[1]] = _midpoint(tmp, tuple(i - lo for i in iy), 2)


def fill_ghost(store: FieldStore, m: Mesh, p: int, d: int, buf: int = 0) -> None:
    """Fill the ghost block of patch ``p`` in direction ``d``.

    Same-level neighbor: copy its interior. Missing neighbor on a refined level:
    interpolate from the parent. Physical boundary on the root level: zero
    gradient (edge nodes replicated).
    """
    pf = store[p]
    meta = m.meta[p]
    n, ng = pf.n, pf.ng
    ox, oy = OFFSETS[d]
    (dx0, dx1), (sx0, sx1) = _axis_ranges(ox, n, ng)
    (dy0, dy1), (sy0, sy1) = _axis_ranges(oy, n, ng)
    q = meta.nbr[d]
    if q != NULL:
        src = store[q].u[buf]
        pf.u[buf][:, dx0:dx1, dy0:dy1] = src[:, sx0:sx1, sy0:sy1]
        return
    if meta.level > 0:
        parent = meta.parent
        if parent == NULL:
            raise MissingNeighbor(f"patch {p} lacks {d} neighbor and parent")
        _interp_from_parent(store[parent], pf, buf, (dx0, dx1), (dy0, dy1))
        return
    # root level, physical boundary: take the data from whichever patch covers
    # the clamped position and replicate its boundary nodes
    cx, cy = meta.origin
    bx = ox != 0 and m.patch_at(0, cx + ox, cy) == NULL
    by = oy != 0 and m.patch_at(0, cx, cy + oy) == NULL
    sx = 0 if bx else ox
    sy = 0 if by else oy
    src_pid = m.patch_at(0, cx + sx, cy + sy)
    if src_pid == NULL:
        raise MissingNeighbor(f"patch {p}: no data source for ghost direction {d}")
    src = store[src_pid].u[buf]
    ix = _clamped_index(ox, sx, n, ng)
    iy = _clamped_index(oy, sy, n, ng)
    pf.u[buf][:, dx0:dx1, dy0:dy1] = src[:, ix[:, None], iy[None, :]]


def ghost_filler(store: FieldStore, m: Mesh, p: int, d: int, buf: int = 0):
    """A callable equivalent to ``fill_ghost(store, m, p, d, buf)``.

    Same-level copies are bound to fixed array views, so the callable is only
    valid while the mesh links and field slots stay as they are now.
    """
    q = m.meta[p].nbr[d]
    if q == NULL:
        return partial(fill_ghost, store, m, p, d, buf)
    pf = store[p]
    ox, oy = OFFSETS[d]
    (dx0, dx1), (sx0, sx1) = _axis_ranges(ox, pf.n, pf.ng)
    (dy0, dy1), (sy0, sy1) = _axis_ranges(oy, pf.n, pf.ng)
    return partial(np.copyto, pf.u[buf][:, dx0:dx1, dy0:dy1],
                   store[q].u[buf][:, sx0:sx1, sy0:sy1])


def _clamped_index(off, src_off, n, ng):
    if off == 0:
        return np.arange(ng, ng + n)
    if src_off == 0:  # clamped onto own edge node
        return np.full(ng, ng if off < 0 else ng + n - 1)
    return np.arange(*_axis_ranges(off, n, ng)[1])


def fill_patch_ghosts(store: FieldStore, m: Mesh, p: int, buf: int = 0) -> None:
    for d in range(8):
        fill_ghost(store, m, p, d, buf)


def halo_exchange(store: FieldStore, m: Mesh, level: int, buf: int = 0) -> None:
    """Fill ghosts of every patch at ``level`` that has same-level neighbors.

    Missing neighbors on refined levels are left to :func:`fill_coarse_fine_ghosts`.
    """
    for p in m.patches_at_level(level):
        for d in range(8):
            if m.meta[p].nbr[d] != NULL or level == 0:
                fill_ghost(store, m, p, d, buf)


def fill_coarse_fine_ghosts(store: FieldStore, m: Mesh, p: int, buf: int = 0) -> None:
    """Interpolate ghost blocks of ``p`` that face a coarser region."""
    meta = m.meta[p]
    if meta.level == 0:
        return
    for d in range(8):
        if meta.nbr[d] == NULL:
            fill_ghost(store, m, p, d, buf)


def prolong_to_children(store: FieldStore, m: Mesh, p: int, buf: int = 0) -> None:
    """Fill children's full arrays (interior and ghosts) from the parent."""
    meta = m.meta[p]
    if not meta.has_children:
        raise NoChildren(f"patch {p} has no children")
    parent = store[p]
    full = (0, parent.n + 2 * parent.ng)
    for c in meta.child:
        _interp_from_parent(parent, store[c], buf, full, full)


def restrict_to_parent(store: FieldStore, m: Mesh, p: int, buf: int = 0) -> None:
    """Inject children's even interior nodes into the parent's interior."""
    meta = m.meta[p]
    if not meta.has_children:
        raise NoChildren(f"patch {p} has no children")
    parent = store[p]
    n, ng = parent.n, parent.ng
    h = n // 2
    for c, (qx, qy) in zip(meta.child, QUADRANT_OFFSETS):
        child = store[c]
        parent.u[buf][:, ng + qx * h:ng + (qx + 1) * h, ng + qy * h:ng + (qy + 1) * h] = \
            child.u[buf][:, ng:ng + n:2, ng:ng + n:2]


def synchronize(store: FieldStore, m: Mesh, buf: int = 0) -> None:
    """Make every active patch's interior and ghosts current, serially.

    Restriction runs finest-first, then ghost filling coarsest-first so that
    coarse-fine interpolation reads fully ghosted parents.
    """
    top = m.max_level
    for level in range(top - 1, -1, -1):
        for p in m.patches_at_level(level):
            if m.meta[p].has_children:
                restrict_to_parent(store, m, p, buf)
    for level in range(top + 1):
        for p in m.patches_at_level(level):
            fill_patch_ghosts(store, m, p, buf)


def gather_level(store: FieldStore, m: Mesh, level: int, buf: int = 0,
                 fill=np.nan) -> tuple[np.ndarray, np.ndarray]:
    """Assemble level data into one global array (4, Nx, Ny) plus coverage mask."""
    nx, ny = store.global_nodes(level)
    out = np.full((4, nx, ny), fill)
    mask = np.zeros((nx, ny), dtype=bool)
    for p in m.patches_at_level(level):
        pf = store[p]
        ox, oy = pf.origin
        out[:, ox:ox + pf.n, oy:oy + pf.n] = pf.interior(pf.u[buf])
        mask[ox:ox + pf.n, oy:oy + pf.n] = True
    return out, mask
