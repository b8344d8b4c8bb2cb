"""Brute-force exact Riemann solution used as a test oracle.

Written separately from ``patchflow.riemann``: the star pressure comes from
plain bisection and each wave is sampled from its textbook closed form.
"""
import numpy as np


def _wave_jump(p, rho, pk, gamma):
    c = np.sqrt(gamma * pk / rho)
    if p > pk:
        a = 2.0 / ((gamma + 1.0) * rho)
        b = (gamma - 1.0) / (gamma + 1.0) * pk
        return (p - pk) * np.sqrt(a / (p + b))
    return 2.0 * c / (gamma - 1.0) * ((p / pk) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)


def star(left, right, gamma=1.4):
    (rl, ul, pl), (rr, ur, pr) = left, right

    def total(p):
        return _wave_jump(p, rl, pl, gamma) + _wave_jump(p, rr, pr, gamma) + ur - ul

    lo, hi = 1e-12, 1e5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    u = 0.5 * (ul + ur) + 0.5 * (_wave_jump(p, rr, pr, gamma) - _wave_jump(p, rl, pl, gamma))
    return p, u


def _side(s, state, ps, us, gamma, sign):
    """Sample the left (sign=-1) or right (sign=+1) wave at speed s = x/t."""
    rho, u, p = state
    c = np.sqrt(gamma * p / rho)
    if ps > p:  # shock
        shock = u + sign * c * np.sqrt((gamma + 1) / (2 * gamma) * ps / p
                                       + (gamma - 1) / (2 * gamma))
        if sign * (s - shock) >= 0:
            return rho, u, p
        k = (gamma - 1) / (gamma + 1)
        return rho * (ps / p + k) / (k * ps / p + 1), us, ps
    # rarefaction: head and tail speeds
    cs = c * (ps / p) ** ((gamma - 1) / (2 * gamma))
    head, tail = u + sign * c, us + sign * cs
    if sign * (s - head) >= 0:
        return rho, u, p
    if sign * (s - tail) <= 0:
        return rho * (ps / p) ** (1 / gamma), us, ps
    uf = 2 / (gamma + 1) * (-sign * c + 0.5 * (gamma - 1) * u + s)
    cf = -sign * (uf - s)
    return rho * (cf / c) ** (2 / (gamma - 1)), uf, p * (cf / c) ** (2 * gamma / (gamma - 1))


def density(left, right, xi, gamma=1.4):
    ps, us = star(left, right, gamma)
    out = np.empty(len(xi))
    for k, s in enumerate(xi):
        out[k] = _side(s, left if s <= us else right, ps, us, gamma, -1 if s <= us else 1)[0]
    return out
