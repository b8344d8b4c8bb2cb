"""Exact solution of the 1D Euler Riemann problem for a perfect gas (Toro, ch. 4)."""
from __future__ import annotations

import numpy as np


def _pressure_function(p, rho, pk, ck, gamma):
    """Velocity jump across a wave from state k to pressure p, and its derivative."""
    if p > pk:  # shock
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        sq = np.sqrt(A / (p + B))
        return (p - pk) * sq, sq * (1.0 - 0.5 * (p - pk) / (B + p))
    # rarefaction
    e = (gamma - 1.0) / (2.0 * gamma)
    f = 2.0 * ck / (gamma - 1.0) * ((p / pk) ** e - 1.0)
    df = 1.0 / (rho * ck) * (p / pk) ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def star_state(left, right, gamma=1.4, tol=1e-14, max_iter=100):
    """Pressure and velocity between the nonlinear waves, by Newton iteration."""
    rl, ul, pl = left
    rr, ur, pr = right
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    if 2.0 * (cl + cr) / (gamma - 1.0) <= ur - ul:
        raise ValueError("initial states generate vacuum")
    p = max(tol, 0.5 * (pl + pr) - 0.125 * (ur - ul) * (rl + rr) * (cl + cr))
    for _ in range(max_iter):
        fl, dfl = _pressure_function(p, rl, pl, cl, gamma)
        fr, dfr = _pressure_function(p, rr, pr, cr, gamma)
        p_new = p - (fl + fr + ur - ul) / (dfl + dfr)
        if p_new < 0.0:
            p_new = tol
        if abs(p_new - p) < tol * 0.5 * (p_new + p):
            p = p_new
            break
        p = p_new
    fl, _ = _pressure_function(p, rl, pl, cl, gamma)
    fr, _ = _pressure_function(p, rr, pr, cr, gamma)
    return p, 0.5 * (ul + ur) + 0.5 * (fr - fl)


def sample(left, right, xi, gamma=1.4):
    """(rho, u, p) at similarity coordinates ``xi = (x - x0) / t``."""
    rl, ul, pl = left
    rr, ur, pr = right
    ps, us = star_state(left, right, gamma)
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    g1 = (gamma - 1.0) / (gamma + 1.0)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rho = np.empty_like(xi)
    u = np.empty_like(xi)
    p = np.empty_like(xi)
    for k, s in enumerate(xi):
        if s <= us:
            if ps > pl:
                sl = ul - cl * np.sqrt((gamma + 1) / (2 * gamma) * ps / pl + (gamma - 1) / (2 * gamma))
                if s <= sl:
                    rho[k], u[k], p[k] = rl, ul, pl
                else:
                    rho[k] = rl * (ps / pl + g1) / (g1 * ps / pl + 1.0)
                    u[k], p[k] = us, ps
            else:
                cls = cl * (ps / pl) ** ((gamma - 1) / (2 * gamma))
                if s <= ul - cl:
                    rho[k], u[k], p[k] = rl, ul, pl
                elif s >= us - cls:
                    rho[k] = rl * (ps / pl) ** (1.0 / gamma)
                    u[k], p[k] = us, ps
                else:
                    c = 2.0 / (gamma + 1) * (cl + 0.5 * (gamma - 1) * (ul - s))
                    u[k] = 2.0 / (gamma + 1) * (cl + 0.5 * (gamma - 1) * ul + s)
                    rho[k] = rl * (c / cl) ** (2.0 / (gamma - 1))
                    p[k] = pl * (c / cl) ** (2.0 * gamma / (gamma - 1))
        else:
            if ps > pr:
                sr = ur + cr * np.sqrt((gamma + 1) / (2 * gamma) * ps / pr + (gamma - 1) / (2 * gamma))
                if s >= sr:
                    rho[k], u[k], p[k] = rr, ur, pr
                else:
                    rho[k] = rr * (ps / pr + g1) / (g1 * ps / pr + 1.0)
                    u[k], p[k] = us, ps
            else:
                crs = cr * (ps / pr) ** ((gamma - 1) / (2 * gamma))
                if s >= ur + cr:
                    rho[k], u[k], p[k] = rr, ur, pr
                elif s <= us + crs:
                    rho[k] = rr * (ps / pr) ** (1.0 / gamma)
                    u[k], p[k] = us, ps
                else:
                    c = 2.0 / (gamma + 1) * (cr - 0.5 * (gamma - 1) * (ur - s))
                    u[k] = 2.0 / (gamma + 1) * (-cr + 0.5 * (gamma - 1) * ur + s)
                    rho[k] = rr * (c / cr) ** (2.0 / (gamma - 1))
                    p[k] = pr * (c / cr) ** (2.0 * gamma / (gamma - 1))
    return rho, u, p
