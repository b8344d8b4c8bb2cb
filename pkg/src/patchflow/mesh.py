"""Quadtree patch hierarchy over a Cartesian root scaffold.

Every patch is a fixed-size block identified by an integer pid. Patches at
level ``L`` live on a patch lattice of ``roots_nx * 2**L`` by ``roots_ny * 2**L``
cells; ``origin`` is the lattice coordinate of the patch's lower-left corner.

Neighbor slots follow the order N, E, S, W, NE, SE, SW, NW, and ``NULL`` (-1)
marks a missing neighbor or the physical boundary. Children are stored in
quadrant order SW, SE, NW, NE so that child ``k`` sits at
``2 * origin + (k & 1, k >> 1)``.

Two validity rules are maintained by every public mutation:

* R1: root patches (level 0) are permanent.
* R2: a patch with children has all eight same-level Moore neighbors active
  (neighbors beyond a non-periodic boundary are exempt).
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from numba import njit

from .errors import CapacityExceeded, InactivePatch, MeshError, NotALeaf

log = logging.getLogger(__name__)

NULL = -1

N, E, S, W, NE, SE, SW, NW = range(8)
DIR_NAMES = ("N", "E", "S", "W", "NE", "SE", "SW", "NW")
OFFSETS = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, -1), (-1, 1))
OPPOSITE = (S, W, N, E, SW, NW, NE, SE)
QUADRANT_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))  # SW, SE, NW, NE
_OFF = np.array(OFFSETS, dtype=np.int64)
_OPP = np.array(OPPOSITE, dtype=np.int64)


def opposite(d: int) -> int:
    return OPPOSITE[d]


@dataclass
class PatchMeta:
    level: int = 0
    nbr: list[int] = field(default_factory=lambda: [NULL] * 8)
    parent: int = NULL
    child: list[int] = field(default_factory=lambda: [NULL] * 4)
    refine_req: bool = False
    coarsen_req: bool = False
    active: bool = False
    origin: tuple[int, int] = (0, 0)

    @property
    def has_children(self) -> bool:
        return self.child[0] != NULL


class Violation(NamedTuple):
    kind: str
    pid: int
    detail: str


class Mesh:
    """Set of active patches plus the permanent root scaffold."""

    def __init__(self, roots_nx: int, roots_ny: int, num_patches_max: int,
                 periodic: bool = True):
        if roots_nx < 1 or roots_ny < 1:
            raise ValueError("root scaffold needs at least one patch per axis")
        if roots_nx * roots_ny > num_patches_max:
            raise CapacityExceeded(
                f"{roots_nx}x{roots_ny} roots exceed capacity {num_patches_max}")
        self.roots_nx = roots_nx
        self.roots_ny = roots_ny
        self.num_patches_max = num_patches_max
        self.periodic = periodic
        self.meta = [PatchMeta() for _ in range(num_patches_max)]
        self.free_list = list(range(roots_nx * roots_ny, num_patches_max))
        heapq.heapify(self.free_list)
        self._where: dict[tuple[int, int, int], int] = {}
        self.roots = [[NULL] * roots_ny for _ in range(roots_nx)]
        # recursion depth reached by the most recent refine_patch call
        self.last_refine_depth = 0

        for j in range(roots_ny):
            for i in range(roots_nx):
                pid = j * roots_nx + i
                m = self.meta[pid]
                m.active = True
                m.level = 0
                m.origin = (i, j)
                self.roots[i][j] = pid
                self._where[(0, i, j)] = pid
        for pid in range(roots_nx * roots_ny):
            self._wire(pid)

    # -- geometry ---------------------------------------------------------

    def level_shape(self, level: int) -> tuple[int, int]:
        return self.roots_nx << level, self.roots_ny << level

    def _wrap(self, level: int, cx: int, cy: int):
        """Lattice coordinate after periodic wrap, or None outside the domain."""
        nx, ny = self.level_shape(level)
        if self.periodic:
            return cx % nx, cy % ny
        if 0 <= cx < nx and 0 <= cy < ny:
            return cx, cy
        return None

    def patch_at(self, level: int, cx: int, cy: int) -> int:
        pos = self._wrap(level, cx, cy)
        if pos is None:
            return NULL
        return self._where.get((level, *pos), NULL)

    def is_boundary(self, pid: int, d: int) -> bool:
        """True if direction ``d`` of ``pid`` points outside a non-periodic domain."""
        m = self.meta[pid]
        dx, dy = OFFSETS[d]
        return self._wrap(m.level, m.origin[0] + dx, m.origin[1] + dy) is None

    def _wire(self, pid: int) -> None:
        # patch_at inlined: this runs for every patch created
        m = self.meta[pid]
        ox, oy = m.origin
        L = m.level
        nx, ny = self.roots_nx << L, self.roots_ny << L
        where, meta, periodic = self._where, self.meta, self.periodic
        for d, (dx, dy) in enumerate(OFFSETS):
            cx, cy = ox + dx, oy + dy
            if periodic:
                q = where.get((L, cx % nx, cy % ny), NULL)
            elif 0 <= cx < nx and 0 <= cy < ny:
                q = where.get((L, cx, cy), NULL)
            else:
                q = NULL
            m.nbr[d] = q
            if q != NULL:
                meta[q].nbr[OPPOSITE[d]] = pid

    def _unwire(self, pid: int) -> None:
        m = self.meta[pid]
        for d in range(8):
            q = m.nbr[d]
            if q != NULL and q != pid and self.meta[q].nbr[OPPOSITE[d]] == pid:
                self.meta[q].nbr[OPPOSITE[d]] = NULL
            m.nbr[d] = NULL

    # -- queries ----------------------------------------------------------

    def _require_active(self, pid: int) -> PatchMeta:
        if not (0 <= pid < self.num_patches_max) or not self.meta[pid].active:
            raise InactivePatch(f"patch {pid} is not active")
        return self.meta[pid]

    def neighbor(self, pid: int, d: int) -> int:
        return self._require_active(pid).nbr[d]

    def active_ids(self) -> list[int]:
        return [p for p, m in enumerate(self.meta) if m.active]

    def leaves(self) -> list[int]:
        return [p for p, m in enumerate(self.meta) if m.active and not m.has_children]

    def patches_at_level(self, level: int) -> list[int]:
        return [p for p, m in enumerate(self.meta) if m.active and m.level == level]

    @property
    def max_level(self) -> int:
        return max(m.level for m in self.meta if m.active)

    @property
    def num_active(self) -> int:
        return self.num_patches_max - len(self.free_list)

    def is_leaf(self, pid: int) -> bool:
        return not self._require_active(pid).has_children

    # -- refinement -------------------------------------------------------

    def _plan_refine(self, pid: int, planned: list[int], planned_set: set[int],
                     depth: int) -> int:
        """Recursive refinement without mutation.

        Appends to ``planned`` every patch whose children must be allocated,
        in the order the recursion allocates them, and returns the deepest
        recursion level reached.
        """
        m = self.meta[pid]
        deepest = depth
        ox, oy = m.origin
        for d, (dx, dy) in enumerate(OFFSETS):
            pos = self._wrap(m.level, ox + dx, oy + dy)
            if pos is None:
                continue  # physical boundary
            if (m.level, *pos) in self._where:
                continue
            # A missing neighbor lies inside the parent's corresponding
            # neighbor; it exists after that one is refined.
            r = self._where.get((m.level - 1, pos[0] // 2, pos[1] // 2), NULL)
            if r == NULL:
                raise MeshError(f"patch {pid}: parent neighborhood incomplete (R2 broken)")
            if r in planned_set:
                continue
            deepest = max(deepest, self._plan_refine(r, planned, planned_set, depth + 1))
        planned.append(pid)
        planned_set.add(pid)
        return deepest

    def refine_patch(self, pid: int) -> list[int]:
        """Refine a leaf, first refining coarser patches needed by rule R2.

        Returns the newly created pids in allocation order. Raises
        ``CapacityExceeded`` without touching the mesh if the slots needed by
        the whole recursion are not available.
        """
        m = self._require_active(pid)
        if m.has_children:
            raise NotALeaf(f"patch {pid} already has children")
        planned: list[int] = []
        self.last_refine_depth = self._plan_refine(pid, planned, set(), 0)
        if 4 * len(planned) > len(self.free_list):
            raise CapacityExceeded(
                f"refining patch {pid} needs {4 * len(planned)} slots, "
                f"{len(self.free_list)} free")
        created: list[int] = []
        for r in planned:
            created.extend(self._allocate_children(r))
        return created

    def _allocate_children(self, pid: int) -> list[int]:
        m = self.meta[pid]
        kids = [heapq.heappop(self.free_list) for _ in range(4)]
        ox, oy = m.origin
        for q, (qx, qy) in zip(kids, QUADRANT_OFFSETS):
            c = self.meta[q]
            c.level = m.level + 1
            c.origin = (2 * ox + qx, 2 * oy + qy)
            c.parent = pid
            c.child = [NULL] * 4
            c.nbr = [NULL] * 8
            c.refine_req = c.coarsen_req = False
            c.active = True
            self._where[(c.level, *c.origin)] = q
        m.child = kids
        for q in kids:
            self._wire(q)
        return kids

    def refinement_pass(self, max_level: int | None = None) -> list[int]:
        """Consume ``refine_req`` flags in ascending pid order.

        Only leaves below ``max_level`` are refined; flags are always cleared.
        Requests that would exceed capacity are skipped.
        """
        created: list[int] = []
        for pid in range(self.num_patches_max):
            m = self.meta[pid]
            if not (m.active and m.refine_req):
                continue
            m.refine_req = False
            if m.has_children or (max_level is not None and m.level >= max_level):
                continue
            try:
                created.extend(self.refine_patch(pid))
            except CapacityExceeded as exc:
                log.warning("refinement of %d skipped: %s", pid, exc)
        for m in self.meta:
            m.refine_req = False
        return created

    # -- coarsening -------------------------------------------------------

    def is_coarsening_allowed(self, pid: int) -> bool:
        m = self._require_active(pid)
        if m.level == 0 or not m.has_children:
            return False
        for q in m.nbr:
            if q != NULL and self.meta[q].has_children:
                return False
        # children must be leaves, otherwise their own children lose support
        return not any(self.meta[c].has_children for c in m.child)

    def delete_children(self, pid: int) -> list[int]:
        m = self.meta[pid]
        kids = list(m.child)
        for q in kids:
            c = self.meta[q]
            self._unwire(q)
            del self._where[(c.level, *c.origin)]
            self.meta[q] = PatchMeta()
            heapq.heappush(self.free_list, q)
        m.child = [NULL] * 4
        return kids

    def coarsening_pass(self) -> list[int]:
        """Delete children of every flagged patch that may be coarsened.

        Visits patches in ascending pid order in a single pass and clears all
        ``coarsen_req`` flags. Returns the pids whose children were removed.
        """
        coarsened = []
        for pid in range(self.num_patches_max):
            m = self.meta[pid]
            if not (m.active and m.coarsen_req):
                continue
            m.coarsen_req = False
            if self.is_coarsening_allowed(pid):
                self.delete_children(pid)
                coarsened.append(pid)
        for m in self.meta:
            m.coarsen_req = False
        return coarsened

    # -- validation -------------------------------------------------------

    def validate(self) -> list[Violation]:
        """All violations of R1, R2, link reciprocity and parent/child consistency."""
        out: list[Violation] = []
        meta, where, cap = self.meta, self._where, self.num_patches_max
        for i in range(self.roots_nx):
            for j in range(self.roots_ny):
                r = self.roots[i][j]
                if not (0 <= r < cap and meta[r].active and meta[r].level == 0):
                    out.append(Violation("R1", r, f"root ({i},{j}) is not an active level-0 patch"))
        ids = [p for p in range(cap) if meta[p].active]
        if not ids:
            return out
        rows = np.array([(m.level, *m.origin, m.parent, *m.child, *m.nbr)
                         for m in (meta[p] for p in ids)], dtype=np.int64).reshape(-1, 16)
        keys = np.array(list(where), dtype=np.int64).reshape(-1, 3)
        vals = np.fromiter(where.values(), dtype=np.int64, count=len(where))
        top = max(int(rows[:, 0].max()), int(keys[:, 0].max()) if len(keys) else 0, 0)
        shapes = np.array([self.level_shape(L) for L in range(top + 1)], dtype=np.int64)
        base = np.concatenate(([0], np.cumsum(shapes[:, 0] * shapes[:, 1])))
        lattice = np.full(base[-1], NULL, dtype=np.int64)
        # position-map entries off the lattice have no slot and are skipped
        L, cx, cy = keys.T
        Lc = np.clip(L, 0, top)
        nx, ny = shapes[Lc, 0], shapes[Lc, 1]
        ok = (L >= 0) & (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        lattice[base[Lc[ok]] + cx[ok] * ny[ok] + cy[ok]] = vals[ok]
        hits = _check_links(rows, np.array(ids, dtype=np.int64), cap, self.periodic,
                            shapes, base, lattice)
        for code, k, a, b in hits:
            pid = ids[k]
            kind, msg = _MESSAGES[code]
            out.append(Violation(kind, pid, msg.format(a=a, b=b, d=DIR_NAMES[a % 8])))
        return out

    # -- serialization ----------------------------------------------------

    def dump(self) -> str:
        lines = ["# patchflow mesh dump v1",
                 f"roots {self.roots_nx} {self.roots_ny} capacity {self.num_patches_max} "
                 f"periodic {int(self.periodic)}",
                 "# pid level ox oy parent c0 c1 c2 c3 nN nE nS nW nNE nSE nSW nNW"]
        for pid, m in enumerate(self.meta):
            if m.active:
                fields = [pid, m.level, *m.origin, m.parent, *m.child, *m.nbr]
                lines.append(" ".join(str(v) for v in fields))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "Mesh":
        """Rebuild a mesh from :meth:`dump` output without repairing anything."""
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        head = rows[0]
        if head[0] != "roots":
            raise ValueError("mesh dump lacks a 'roots' header line")
        nx, ny, cap, per = int(head[1]), int(head[2]), int(head[4]), bool(int(head[6]))
        mesh = cls(nx, ny, cap, per)
        mesh.meta = [PatchMeta() for _ in range(cap)]
        mesh._where = {}
        used = set()
        for row in rows[1:]:
            v = [int(t) for t in row]
            if len(v) != 17:
                raise ValueError(f"malformed patch line: {' '.join(row)}")
            pid = v[0]
            mesh.meta[pid] = PatchMeta(level=v[1], origin=(v[2], v[3]), parent=v[4],
                                       child=v[5:9], nbr=v[9:17], active=True)
            mesh._where[(v[1], v[2], v[3])] = pid
            used.add(pid)
        mesh.free_list = [p for p in range(cap) if p not in used]
        heapq.heapify(mesh.free_list)
        for i in range(nx):
            for j in range(ny):
                mesh.roots[i][j] = mesh._where.get((0, i, j), NULL)
        return mesh



# (kind, message) per code emitted by _check_links; {d} names direction a
_MESSAGES = {
    0: ("index", "position map disagrees with metadata"),
    1: ("parent", "root has a parent"),
    2: ("parent", "parent {a} is not active"),
    3: ("parent", "inconsistent with parent {a}"),
    4: ("children", "{a} of 4 children present"),
    5: ("children", "child {a} inconsistent"),
    6: ("R2", "refined patch lacks {d} neighbor"),
    7: ("R2", "{d} neighbor {b} inactive"),
    8: ("reciprocity", "{d} neighbor {b} inactive"),
    9: ("reciprocity", "{d} neighbor {b} does not point back"),
    10: ("position", "{d} slot holds {b}, lattice has another patch"),
}


@njit(cache=True)
def _check_links(rows, ids, cap, periodic, shapes, base, lattice):
    """Structural checks on packed metadata rows (level, ox, oy, parent, child[4], nbr[8]).

    Returns (code, row, a, b) tuples; see ``_MESSAGES``.
    """
    n = rows.shape[0]
    slot = np.full(cap, -1, dtype=np.int64)
    for k in range(n):
        slot[ids[k]] = k
    out = []
    for k in range(n):
        pid = ids[k]
        lev, ox, oy, par = rows[k, 0], rows[k, 1], rows[k, 2], rows[k, 3]
        nx, ny = shapes[lev, 0], shapes[lev, 1]
        if not (0 <= ox < nx and 0 <= oy < ny) or lattice[base[lev] + ox * ny + oy] != pid:
            out.append((0, k, 0, 0))
        if lev == 0:
            if par != -1:
                out.append((1, k, par, 0))
        else:
            kp = slot[par] if 0 <= par < cap else -1
            if kp < 0:
                out.append((2, k, par, 0))
            else:
                mine = False
                for c in range(4):
                    if rows[kp, 4 + c] == pid:
                        mine = True
                if rows[kp, 0] != lev - 1 or not mine:
                    out.append((3, k, par, 0))
        nk = 0
        for c in range(4):
            if rows[k, 4 + c] != -1:
                nk += 1
        if nk != 0 and nk != 4:
            out.append((4, k, nk, 0))
        refined = nk == 4
        if refined:
            for c in range(4):
                ch = rows[k, 4 + c]
                kc = slot[ch] if 0 <= ch < cap else -1
                if kc < 0 or rows[kc, 3] != pid or rows[kc, 0] != lev + 1 \
                        or rows[kc, 1] != 2 * ox + (c & 1) or rows[kc, 2] != 2 * oy + (c >> 1):
                    out.append((5, k, ch, 0))
        for d in range(8):
            q = rows[k, 8 + d]
            cx = ox + _OFF[d, 0]
            cy = oy + _OFF[d, 1]
            outside = False
            if periodic:
                cx %= nx
                cy %= ny
            elif not (0 <= cx < nx and 0 <= cy < ny):
                outside = True
            expect = -1 if outside else lattice[base[lev] + cx * ny + cy]
            kq = slot[q] if 0 <= q < cap else -1
            if q != -1:
                if kq < 0:
                    if refined:
                        out.append((7, k, d, q))
                    out.append((8, k, d, q))
                elif rows[kq, 8 + _OPP[d]] != pid:
                    out.append((9, k, d, q))
            elif refined and not outside:
                out.append((6, k, d, q))
            if expect != q:
                out.append((10, k, d, q))
    return out


def init_mesh(roots_nx: int, roots_ny: int, num_patches_max: int,
              periodic: bool = True) -> Mesh:
    return Mesh(roots_nx, roots_ny, num_patches_max, periodic)


def neighbor(m: Mesh, pid: int, d: int) -> int:
    return m.neighbor(pid, d)


def refine_patch(m: Mesh, pid: int) -> list[int]:
    return m.refine_patch(pid)


def coarsening_pass(m: Mesh) -> int:
    return len(m.coarsening_pass())


def is_coarsening_allowed(m: Mesh, pid: int) -> bool:
    return m.is_coarsening_allowed(pid)


def validate_mesh(m: Mesh) -> list[Violation]:
    return m.validate()


def leaves(m: Mesh) -> list[int]:
    return m.leaves()


def leaf_area(m: Mesh, pids: Iterable[int] | None = None) -> float:
    """Total footprint of the given patches in root-patch units."""
    pids = m.leaves() if pids is None else pids
    return sum(0.25 ** m.meta[p].level for p in pids)
