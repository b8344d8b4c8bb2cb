"""Random refine/coarsen request replays shared by the mesh tests and the acceptance suite."""
import numpy as np

from patchflow.errors import CapacityExceeded
from patchflow.mesh import Mesh, leaf_area


def area_ok(m: Mesh) -> bool:
    # leaves tile the domain exactly once: total area and no overlapping footprints
    cover = set()
    finest = m.max_level
    for p in m.leaves():
        meta = m.meta[p]
        k = 1 << (finest - meta.level)
        ox, oy = meta.origin[0] * k, meta.origin[1] * k
        cells = {(ox + i, oy + j) for i in range(k) for j in range(k)}
        if cover & cells:
            return False
        cover |= cells
    nx, ny = m.level_shape(finest)
    return len(cover) == nx * ny and leaf_area(m) == m.roots_nx * m.roots_ny


def run_sequence(seed: int, roots=(4, 4), max_level=4, passes=4, capacity=256,
                 check_area=False, stats=None) -> list[str]:
    """Replay one random request sequence; returns failure descriptions.

    Each pass flags a few leaves for refinement (deeper leaves are favoured so
    the recursion of refine_patch is exercised), runs the refinement pass,
    flags a random subset of refined patches for coarsening and runs the
    coarsening pass. The mesh is validated after every pass.
    """
    rng = np.random.default_rng(seed)
    m = Mesh(*roots, capacity, periodic=True)
    fails = []
    p_coa = rng.uniform(0.05, 0.6)
    for step in range(passes):
        lv = m.leaves()
        weights = np.array([1.0 + 2.0 * m.meta[p].level for p in lv])
        k = int(rng.integers(1, 4))
        flagged = rng.choice(lv, size=min(k, len(lv)), replace=False, p=weights / weights.sum())
        # same semantics as Mesh.refinement_pass: ascending pid, leaves below max_level
        for pid in sorted(int(p) for p in flagged):
            meta = m.meta[pid]
            if not meta.active or meta.has_children or meta.level >= max_level:
                continue
            try:
                m.refine_patch(pid)
            except CapacityExceeded:
                pass  # allowed; the mesh must be left valid
            except Exception as exc:
                fails.append(f"seed {seed} step {step}: refine {pid} raised {exc!r}")
            if m.last_refine_depth > meta.level:
                fails.append(f"seed {seed}: recursion depth {m.last_refine_depth} "
                             f"exceeds level {meta.level}")
            if stats is not None:
                stats["max_depth"] = max(stats.get("max_depth", 0), m.last_refine_depth)
        bad = m.validate()
        if bad:
            fails.append(f"seed {seed} step {step} after refine: {bad[:3]}")
            return fails
        for p in m.active_ids():
            if m.meta[p].has_children and rng.random() < p_coa:
                m.meta[p].coarsen_req = True
        n_coarsened = len(m.coarsening_pass())
        bad = m.validate()
        if bad:
            fails.append(f"seed {seed} step {step} after coarsen: {bad[:3]}")
            return fails
        if m.max_level > max_level:
            fails.append(f"seed {seed}: level {m.max_level} above {max_level}")
        if check_area and not area_ok(m):
            fails.append(f"seed {seed} step {step}: leaves do not tile the domain")
        if stats is not None:
            stats["max_level"] = max(stats.get("max_level", 0), m.max_level)
            stats["coarsened"] = stats.get("coarsened", 0) + n_coarsened
            stats["max_active"] = max(stats.get("max_active", 0), m.num_active)
    return fails
