"""End-to-end acceptance checks; each test prints one PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines as they happen;
they are also repeated in the terminal summary.
"""
import dataclasses
import filecmp
import time

import numpy as np
import pytest

import riemann_oracle
from meshfuzz import run_sequence
from numerics_oracles import analytic_jacobian, fd_jacobian
from patchflow import cases
from patchflow.bench import fusion_benchmark, speedups
from patchflow.driver import RunConfig, Simulation, convective_time, run_simulation
from patchflow.fields import gather_level
from patchflow.gas import GasModel, Primitive
from patchflow.mesh import NULL, OFFSETS, init_mesh, neighbor, refine_patch, validate_mesh
from patchflow.numerics import X, Y, eigen_system, weno_weight_deviation
from patchflow.timestep import conserved_totals

RESULTS: dict[tuple[int, str], str] = {}


def report(num: int, title: str, ok: bool, detail: str, variant: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {detail}"
    RESULTS[(num, variant)] = line
    print(line)


# -- 1, 2: mesh ---------------------------------------------------------------

def test_01_mesh_fuzz():
    t0 = time.perf_counter()
    stats, fails = {}, []
    for seed in range(10_000):
        fails += run_sequence(seed, roots=(4, 4), max_level=4, stats=stats)
    wall = time.perf_counter() - t0
    ok = not fails and wall < 60.0
    report(1, "mesh fuzz 10k sequences", ok,
           f"{len(fails)} failures, max level {stats['max_level']}, "
           f"max recursion depth {stats['max_depth']}, {wall:.1f}s")
    assert not fails, fails[:5]
    assert wall < 60.0


def test_02_recursive_refinement():
    m = init_mesh(4, 4, 256, True)
    a = m.roots[1][1]
    refine_patch(m, a)
    c = m.meta[a].child[0]  # SW child: no level-1 patches to its W, S or SW
    assert any(neighbor(m, c, d) == NULL for d in range(8))
    new = refine_patch(m, c)
    ring = [neighbor(m, c, d) for d in range(8)]
    ok = (all(q != NULL and m.meta[q].level == 1 for q in ring)
          and all(m.meta[q].origin == (2 + dx, 2 + dy) for q, (dx, dy) in zip(ring, OFFSETS))
          and len(m.meta[c].child) == 4 and all(m.meta[k].level == 2 for k in m.meta[c].child)
          and len(new) == 16 and validate_mesh(m) == [])
    report(2, "refinement recursion (support first)", ok,
           f"{len(new)} patches created, recursion depth {m.last_refine_depth}")
    assert ok


# -- 3, 4: order of accuracy -------------------------------------------------

def entropy_error(n, scheme, cfl, t_end, characteristic=True, deviation=False):
    cfg = RunConfig(case="entropy_wave", n=n, patch=min(n, 64), scheme=scheme, cfl=cfl,
                    t_end=t_end, characteristic=characteristic)
    with Simulation(cfg) as sim:
        while sim.t < t_end:
            sim.advance(sim.next_dt(t_end))
        err = 0.0
        for p in sim.mesh.leaves():
            x, y = sim.store.coords(p)
            Xg, Yg = np.meshgrid(x, y, indexing="ij")
            exact = cases.entropy_wave_state(Xg, Yg, sim.t)[0]
            pf = sim.store[p]
            err = max(err, float(np.abs(pf.interior(pf.u[0])[0] - exact).max()))
        dev = None
        if deviation:
            sim.stepper.synchronize()
            dev = weno_weight_deviation(sim.store, sim.mesh, sim.gas, cfg.scheme_config())
    return err, dev


def observed_orders(errs):
    e = np.asarray(errs)
    return np.log2(e[:-1] / e[1:])


def test_03_central4_order():
    errs = [entropy_error(n, "central4", 0.2, 0.1)[0] for n in (64, 128, 256)]
    orders = observed_orders(errs)
    ok = orders.min() >= 3.5
    report(3, "central4 convergence order", ok,
           f"Linf {', '.join(f'{e:.2e}' for e in errs)}; orders {np.round(orders, 2).tolist()}")
    assert ok


@pytest.mark.parametrize("characteristic", [True, False], ids=["characteristic", "componentwise"])
def test_04_weno_smooth_limit(characteristic):
    res = [entropy_error(n, "weno5", 0.2, 0.025, characteristic, deviation=(n == 256))
           for n in (64, 128, 256)]
    errs = [r[0] for r in res]
    dev = res[-1][1]
    orders = observed_orders(errs)
    ok = orders.min() >= 3.0 and dev < 0.05
    label = "characteristic" if characteristic else "component-wise"
    report(4, f"weno5 smooth limit ({label})", ok,
           f"orders {np.round(orders, 2).tolist()}; max weight deviation {dev:.2e} at 256^2",
           variant=label)
    assert ok


# -- 5, 6: implosion conservation and symmetry --------------------------------

@pytest.fixture(scope="module")
def implosion_256():
    cfg = RunConfig(case="implosion", n=256, patch=64, scheme="weno5", cfl=0.45, t_end=1.0)
    sym = []
    with Simulation(cfg) as sim:
        t0 = conserved_totals(sim.store, sim.mesh)
        sym.append(cases.symmetry_errors(sim.store, sim.mesh))
        for k in range(1, 201):
            sim.advance(sim.next_dt(cfg.t_end))
            if k % 20 == 0:
                sim.stepper.synchronize()
                sym.append(cases.symmetry_errors(sim.store, sim.mesh))
        t1 = conserved_totals(sim.store, sim.mesh)
    return t0, t1, np.array(sym), sim.t


def test_05_conservation(implosion_256):
    t0, t1, _, t = implosion_256
    # momentum totals start at zero: measure drift against the mass/energy scale
    scale = np.array([abs(t0[0]), abs(t0[0]), abs(t0[0]), abs(t0[3])])
    drift = np.abs(t1 - t0) / scale
    ok = bool(np.all(drift < 1e-11))
    report(5, "conservation, implosion 256^2, 200 steps", ok,
           f"relative drift (mass, mx, my, energy) = "
           f"{', '.join(f'{d:.1e}' for d in drift)}; t = {t:.4f}")
    assert ok


def test_06_symmetry(implosion_256):
    _, _, sym, _ = implosion_256
    worst = float(sym.max())
    ok = worst < 1e-10
    report(6, "implosion symmetry", ok,
           f"max transpose/point-reflection error {worst:.1e} over {len(sym)} checkpoints")
    assert ok


# -- 7: Sod ----------------------------------------------------------------------

def test_07_sod_shock_tube():
    cfg = RunConfig(case="sod_1d", n=400, patch=80, scheme="weno5", t_end=0.2)
    with Simulation(cfg) as sim:
        while sim.t < cfg.t_end:
            sim.advance(sim.next_dt(cfg.t_end))
        xs, rho = [], []
        for p in sim.mesh.leaves():
            x, _ = sim.store.coords(p)
            pf = sim.store[p]
            xs.append(x)
            rho.append(pf.interior(pf.u[0])[0, :, 0])
        x = np.concatenate(xs)
        rho = np.concatenate(rho)
        order = np.argsort(x)
        x, rho = x[order], rho[order]
        dx = x[1] - x[0]
        exact = riemann_oracle.density(cases.SOD_LEFT, cases.SOD_RIGHT, (x - 0.5) / sim.t)
        # every row across y carries the same profile
        U, _ = gather_level(sim.store, sim.mesh, 0)
        flat = float(np.abs(U[0] - U[0][:, :1]).max())
    l1 = float(np.abs(rho - exact).sum() * dx)
    jump = cases.SOD_LEFT[0] - cases.SOD_RIGHT[0]
    over = max(rho.max() - cases.SOD_LEFT[0], cases.SOD_RIGHT[0] - rho.min(), 0.0) / jump
    ok = l1 < 0.02 and over <= 0.01 and flat == 0.0
    report(7, "Sod tube vs exact Riemann oracle", ok,
           f"L1 {l1:.4f}, overshoot {100 * over:.3f}% of jump, y-variation {flat:.1e}")
    assert ok


# -- 8: determinism ------------------------------------------------------------

def test_08_executor_determinism(tmp_path):
    base = RunConfig(case="implosion", n=128, patch=16, scheme="weno5", t_end=1.0,
                     max_steps=50, output_every=25, formats="vtk,csv,pgm,schlieren")
    finals, files = {}, {}
    for mode in ("fine", "fused"):
        for workers in (1, 8):
            out = tmp_path / f"{mode}-{workers}"
            cfg = dataclasses.replace(base, exec_mode=mode, workers=workers, out=str(out))
            res = run_simulation(cfg)
            assert res.steps == 50
            files[(mode, workers)] = out
            finals[(mode, workers)] = res.totals
    ref = files[("fused", 1)]
    names = sorted(p.name for p in ref.iterdir())
    same_files = all(
        sorted(p.name for p in d.iterdir()) == names
        and all(filecmp.cmp(ref / n, d / n, shallow=False) for n in names)
        for d in files.values())
    same_totals = all(np.array_equal(v, finals[("fused", 1)]) for v in finals.values())
    ok = same_files and same_totals
    report(8, "executor determinism {fine,fused} x {1,8} workers", ok,
           f"{len(names)} snapshot files per run byte-identical: {same_files}; "
           f"totals identical: {same_totals}")
    assert ok


def test_08b_final_fields_bitwise():
    base = RunConfig(case="implosion", n=128, patch=16, scheme="weno5")
    states = {}
    for mode in ("fine", "fused"):
        for workers in (1, 8):
            cfg = dataclasses.replace(base, exec_mode=mode, workers=workers)
            with Simulation(cfg) as sim:
                for _ in range(50):
                    sim.advance(sim.next_dt(1.0))
                states[(mode, workers)] = gather_level(sim.store, sim.mesh, 0)[0]
    ref = states[("fused", 1)]
    assert all(np.array_equal(s, ref) for s in states.values())


# -- 9: fusion -----------------------------------------------------------------

def test_09_fusion_speedup(tmp_path):
    rows = fusion_benchmark(256, (16, 256), iters=2, warmup=1, injected_overhead=50e-6,
                            out=tmp_path / "fusion.csv", repeats=3)
    s = speedups(rows)
    n16 = next(r["n_patches"] for r in rows if r["patch_size"] == 16)
    same = {r["patch_size"]: r["checksum"] for r in rows if r["mode"] == "fine"} == \
        {r["patch_size"]: r["checksum"] for r in rows if r["mode"] == "fused"}
    ok = s[16] >= 3.0 and s[256] <= 1.3 and n16 >= 256 and same
    report(9, "task fusion speedup (50us injected overhead)", ok,
           f"fine/fused = {s[16]:.2f}x at 16^2 ({n16} patches), {s[256]:.2f}x at 256^2")
    assert ok


# -- 10: eigen system --------------------------------------------------------------

def test_10_eigen_system():
    g = GasModel()
    rng = np.random.default_rng(2024)
    worst_inv = worst_fd = worst_an = 0.0
    for _ in range(1000):
        W = Primitive(rng.uniform(0.05, 5.0), rng.uniform(-3, 3), rng.uniform(-3, 3),
                      rng.uniform(0.05, 5.0))
        for axis in (X, Y):
            es = eigen_system(W, W, g, axis)
            A = es.Rm @ np.diag(es.lam) @ es.L
            scale = max(1.0, float(np.abs(A).max()))
            worst_inv = max(worst_inv, float(np.abs(es.L @ es.Rm - np.eye(4)).max()))
            worst_fd = max(worst_fd, float(np.abs(A - fd_jacobian(W, g, axis)).max()) / scale)
            worst_an = max(worst_an,
                           float(np.abs(A - analytic_jacobian(W, g, axis)).max()) / scale)
    ok = worst_inv < 1e-12 and worst_fd < 1e-6 and worst_an < 1e-10
    report(10, "eigen-system checks, 1000 states", ok,
           f"max|L R - I| {worst_inv:.1e}; Jacobian vs finite differences {worst_fd:.1e}, "
           f"vs closed form {worst_an:.1e}")
    assert ok


# -- 11: shear layer -------------------------------------------------------------

def test_11_shear_layer(tmp_path):
    cfg = RunConfig(case="shear_layer", n=256, patch=64, scheme="weno5")
    tc = convective_time(cfg)
    cfg = dataclasses.replace(cfg, t_end=tc)
    with Simulation(cfg) as sim:
        tot0 = conserved_totals(sim.store, sim.mesh)
        e0 = cases.perturbation_energy(sim.store, sim.mesh)
        min_rho = min_p = np.inf
        while sim.t < tc:
            sim.advance(sim.next_dt(tc))
            if sim.steps % 25 == 0:
                U, _ = gather_level(sim.store, sim.mesh, 0)
                min_rho = min(min_rho, float(U[0].min()))
                p = 0.4 * (U[3] - 0.5 * (U[1] ** 2 + U[2] ** 2) / U[0])
                min_p = min(min_p, float(p.min()))
        e1 = cases.perturbation_energy(sim.store, sim.mesh)
        tot1 = conserved_totals(sim.store, sim.mesh)
        img = sim.write_schlieren(tmp_path / "shear_schlieren.pgm")
    scale = np.array([tot0[0], tot0[0], tot0[0], tot0[3]])
    drift = np.abs(tot1 - tot0) / scale
    ok = (e1 > e0 and min_rho > 0 and min_p > 0 and img.stat().st_size > 256 * 256
          and np.all(drift < 1e-11))
    report(11, "shear layer to one convective time", ok,
           f"t_c = {tc:.4f}, {sim.steps} steps; v-energy {e0:.2e} -> {e1:.2e} "
           f"(x{e1 / e0:.1f}); min rho {min_rho:.3f}, min p {min_p:.3f}; "
           f"max drift {drift.max():.1e}; {img.name} written")
    assert ok
