import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patchflow.driver import RunConfig, Simulation
from patchflow.errors import NonPositiveState, SolverBlowup
from patchflow.fields import FieldStore
from patchflow.gas import GasModel
from patchflow.mesh import Mesh
from patchflow.timestep import Stepper, compute_dt, conserved_totals, ssprk3_update
from patchflow.numerics import SchemeConfig


@given(st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False),
       st.floats(0.01, 1.0))
def test_rk3_amplification_factor(lam, dt):
    z = lam * dt
    got = ssprk3_update(1.0 + 0j, lambda u: lam * u, dt)
    assert got == pytest.approx(1 + z + z ** 2 / 2 + z ** 3 / 6, rel=1e-12, abs=1e-12)


def test_rk3_is_third_order_on_ode():
    # du/dt = -u^2, u(0) = 1 -> u = 1 / (1 + t)
    errs = []
    for n in (20, 40, 80):
        u, dt = 1.0, 1.0 / n
        for _ in range(n):
            u = ssprk3_update(u, lambda v: -v * v, dt)
        errs.append(abs(u - 0.5))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 2.8)


def uniform_store(rho, u, v, p, n=8, roots=(2, 2), domain=((0, 1), (0, 1))):
    m = Mesh(*roots, roots[0] * roots[1])
    s = FieldStore(m, n, domain)
    g = GasModel()
    U = np.array([rho, rho * u, rho * v, p / 0.4 + 0.5 * rho * (u * u + v * v)])
    for pid in m.active_ids():
        s[pid].u[0][...] = U[:, None, None]
    return m, s, g


def test_compute_dt_formula():
    m, s, g = uniform_store(1.0, 0.5, -0.25, 1.0)
    c = np.sqrt(1.4)
    dx = 1.0 / 16
    expect = 0.45 / ((0.5 + c) / dx + (0.25 + c) / dx)
    assert compute_dt(s, m, g, 0.45) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(ValueError):
        compute_dt(s, m, g, 0.0)


def test_compute_dt_rejects_bad_state():
    m, s, g = uniform_store(1.0, 0.0, 0.0, 1.0)
    s[3].interior(s[3].u[0])[0, 2, 2] = -1.0
    with pytest.raises(NonPositiveState):
        compute_dt(s, m, g, 0.5)


@pytest.mark.parametrize("mode", ["central4", "weno5"])
def test_uniform_state_is_preserved(mode):
    m, s, g = uniform_store(1.3, 0.4, -0.2, 0.9)
    ref = s[0].u[0].copy()
    with _stepper(s, m, g, mode) as stp:
        stp.synchronize()
        for _ in range(3):
            stp.step(0.01)
    for pid in m.active_ids():
        got = s[pid].interior(s[pid].u[0])
        assert np.allclose(got, ref[:, :8, :8], rtol=1e-13, atol=1e-13)


class _stepper:
    def __init__(self, s, m, g, mode, **kw):
        self.st = Stepper(s, m, g, SchemeConfig(mode), **kw)

    def __enter__(self):
        return self.st

    def __exit__(self, *exc):
        self.st.close()


def test_step_rejects_nonpositive_dt():
    m, s, g = uniform_store(1.0, 0.0, 0.0, 1.0)
    with _stepper(s, m, g, "weno5") as stp:
        with pytest.raises(ValueError):
            stp.step(0.0)


def test_blowup_reports_step_and_patch():
    m, s, g = uniform_store(1.0, 0.0, 0.0, 1.0)
    s[2].interior(s[2].u[0])[0, 3, 3] = -5.0
    with _stepper(s, m, g, "weno5") as stp:
        stp.synchronize()
        with pytest.raises(SolverBlowup) as ei:
            stp.step(1e-3)
    assert ei.value.step == 0 and ei.value.stage == 0 and ei.value.patch is not None


def state_after(cfg, steps):
    with Simulation(cfg) as sim:
        dt = sim.next_dt(np.inf)
        for _ in range(steps):
            sim.advance(dt)
        return {p: sim.store[p].u[0].copy() for p in sim.mesh.leaves()}, \
            conserved_totals(sim.store, sim.mesh)


@pytest.mark.parametrize("scheme", ["weno5", "central4"])
def test_modes_and_workers_are_bitwise_identical(scheme):
    base = RunConfig(case="implosion", n=32, patch=8, scheme=scheme)
    ref, _ = state_after(base, 3)
    for mode, workers in [("fine", 1), ("fused", 3), ("fine", 3)]:
        got, _ = state_after(dataclasses.replace(base, exec_mode=mode, workers=workers), 3)
        for p in ref:
            assert np.array_equal(got[p], ref[p]), (mode, workers, p)


def test_patch_decomposition_is_invisible():
    """Same global state for 1x1, 2x2 and 4x4 root layouts."""
    from patchflow.fields import gather_level
    outs = []
    for patch in (32, 16, 8):
        cfg = RunConfig(case="implosion", n=32, patch=patch)
        with Simulation(cfg) as sim:
            dt = 2e-3
            for _ in range(2):
                sim.advance(dt)
            outs.append(gather_level(sim.store, sim.mesh, 0)[0])
    assert np.array_equal(outs[0], outs[1]) and np.array_equal(outs[0], outs[2])


def test_phase_cache_rebuilds_after_refinement():
    from patchflow.fields import prolong_to_children
    cfg = RunConfig(case="implosion", n=32, patch=8, amr=True, max_level=1)
    with Simulation(cfg) as sim:
        sim.advance(1e-4)
        key0 = sim.stepper._cache_key
        leaf = next(p for p in sim.mesh.leaves() if sim.mesh.meta[p].level == 0)
        sim.mesh.refine_patch(leaf)
        sim.store.sync(sim.mesh)
        prolong_to_children(sim.store, sim.mesh, leaf)
        sim.stepper.synchronize()
        assert sim.stepper._cache_key != key0
        before = {p: sim.store[p].u[0].copy() for p in sim.mesh.active_ids()}
        sim.advance(1e-4)
        cached = {p: sim.store[p].u[0].copy() for p in sim.mesh.leaves()}
        for p, u in before.items():
            sim.store[p].u[0][...] = u
        fresh = Stepper(sim.store, sim.mesh, sim.gas, sim.cfg.scheme_config(), sim.executor)
        fresh.step(1e-4)
        for p in cached:
            assert np.array_equal(sim.store[p].u[0], cached[p])


def test_conservation_single_step():
    cfg = RunConfig(case="implosion", n=32, patch=16)
    with Simulation(cfg) as sim:
        t0 = conserved_totals(sim.store, sim.mesh)
        for _ in range(5):
            sim.advance(sim.next_dt(np.inf))
        t1 = conserved_totals(sim.store, sim.mesh)
    assert np.all(np.abs(t1 - t0) <= 1e-13 * np.maximum(1.0, np.abs(t0)))
