"""Snapshot writers: legacy VTK structured points, CSV and binary PGM."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .fields import FieldStore, gather_level
from .gas import GasModel
from .mesh import Mesh

SCALARS = ("rho", "u", "v", "p")


def _primitives(U: np.ndarray, g: GasModel) -> dict[str, np.ndarray]:
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = U[0]
        u = U[1] / rho
        v = U[2] / rho
        p = (g.gamma - 1.0) * (U[3] - 0.5 * (U[1] * u + U[2] * v))
    return {"rho": rho, "u": u, "v": v, "p": p}


def level_primitives(store: FieldStore, m: Mesh, level: int, g: GasModel, buf: int = 0):
    U, mask = gather_level(store, m, level, buf)
    return _primitives(U, g), mask


def _fmt(x: float) -> str:
    return repr(float(x))


def write_vtk(store: FieldStore, m: Mesh, path, g: GasModel,
              extra: dict[int, dict[str, np.ndarray]] | None = None) -> list[Path]:
    """One ASCII STRUCTURED_POINTS file per level.

    A uniform mesh writes ``path`` itself; refined meshes write
    ``<stem>_L<level>.vtk`` with a ``covered`` mask (uncovered nodes are nan).
    ``extra`` maps level -> {name: global array} of additional scalars.
    """
    path = Path(path)
    levels = range(m.max_level + 1)
    written = []
    for level in levels:
        target = path if m.max_level == 0 else path.with_name(f"{path.stem}_L{level}.vtk")
        prims, mask = level_primitives(store, m, level, g)
        nx, ny = store.global_nodes(level)
        dx, dy = store.spacing(level)
        x0, y0 = store.bounds[0][0], store.bounds[1][0]
        scal = dict(prims)
        if m.max_level > 0:
            scal["covered"] = mask.astype(float)
        if extra and level in extra:
            scal.update(extra[level])
        lines = ["# vtk DataFile Version 3.0",
                 f"patchflow level {level}",
                 "ASCII",
                 "DATASET STRUCTURED_POINTS",
                 f"DIMENSIONS {nx} {ny} 1",
                 f"ORIGIN {_fmt(x0)} {_fmt(y0)} 0.0",
                 f"SPACING {_fmt(dx)} {_fmt(dy)} 1.0",
                 f"POINT_DATA {nx * ny}"]
        for name, arr in scal.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            # VTK point order: x fastest
            lines.extend(" ".join(_fmt(v) for v in row) for row in arr.T)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write VTK snapshot {target}: {exc}") from exc
        written.append(target)
    return written


def write_csv(store: FieldStore, m: Mesh, path, g: GasModel) -> Path:
    """x,y,rho,u,v,p rows for every leaf node, leaves in pid order."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", *SCALARS])
            for p in m.leaves():
                pf = store[p]
                x, y = store.coords(p)
                prim = _primitives(pf.interior(pf.u[0]), g)
                X, Y = np.meshgrid(x, y, indexing="ij")
                cols = [X, Y] + [prim[s] for s in SCALARS]
                for row in zip(*(c.ravel() for c in cols)):
                    w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV snapshot {path}: {exc}") from exc
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.asarray(data[name]) for name in data.dtype.names}


def write_pgm(arr: np.ndarray, path, lo: float | None = None, hi: float | None = None) -> Path:
    """8-bit binary PGM (P5) of a global (nx, ny) array; +y points up in the image."""
    path = Path(path)
    a = np.asarray(arr, dtype=float)
    lo = np.nanmin(a) if lo is None else lo
    hi = np.nanmax(a) if hi is None else hi
    if hi > lo:
        scaled = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
    else:
        scaled = np.zeros_like(a)
    img = np.nan_to_num(np.rint(255.0 * scaled)).astype(np.uint8)
    raster = img.T[::-1]  # rows from top (max y) down, columns along x
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(f"P5\n{raster.shape[1]} {raster.shape[0]}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(raster).tobytes())
    except OSError as exc:
        raise OSError(f"cannot write PGM image {path}: {exc}") from exc
    return path


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)


def write_snapshot(store: FieldStore, m: Mesh, path, fmt: str, g: GasModel,
                   var: str = "rho") -> list[Path]:
    """Write one snapshot; ``pgm`` renders ``var`` of the level-0 composite."""
    if fmt == "vtk":
        return write_vtk(store, m, path, g)
    if fmt == "csv":
        return [write_csv(store, m, path, g)]
    if fmt == "pgm":
        prims, _ = level_primitives(store, m, 0, g)
        return [write_pgm(prims[var], path)]
    raise ValueError(f"unknown snapshot format {fmt!r}")
