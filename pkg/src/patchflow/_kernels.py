# Compiled per-patch kernels.
#
# Patch arrays have shape (4, m, m) with m = n + 2*ng, indexed [var, ix, iy].
# Every sweep is written for the x axis; the y sweep passes transposed views
# together with swapped momentum indices (inrm, itan), so both axes execute the
# same arithmetic. Edge arrays have shape (4, n + 3, n): edge e sits between
# logical nodes e - 2 and e - 1 of the sweep axis, for each interior row.
#
# Arithmetic is ordered so that mirroring the data along the sweep axis mirrors
# the results bitwise: pairwise sums of mirrored terms, and the right-biased
# WENO value is the left-biased formula on the reversed stencil.
import numpy as np
from numba import njit

# numpy error model: no zero-division checks inside the hot loops
_jit = njit(cache=True, nogil=True, error_model="numpy")

C9_16 = 0.5625
C1_16 = 0.0625
C9_8 = 1.125
C1_24 = 1.0 / 24.0

# WENO5-JS point interpolation to the midpoint of v2 and v3
D0 = 0.0625
D1 = 0.625
D2 = 0.3125


@_jit
def weno5_weights(v0, v1, v2, v3, v4, eps):
    b0 = (13.0 / 12.0) * (v0 - 2.0 * v1 + v2) ** 2 + 0.25 * (v0 - 4.0 * v1 + 3.0 * v2) ** 2
    b1 = (13.0 / 12.0) * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - v3) ** 2
    b2 = (13.0 / 12.0) * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (3.0 * v2 - 4.0 * v3 + v4) ** 2
    a0 = D0 / (eps + b0) ** 2
    a1 = D1 / (eps + b1) ** 2
    a2 = D2 / (eps + b2) ** 2
    s = a0 + a1 + a2
    return a0 / s, a1 / s, a2 / s


@_jit
def weno5_left(v0, v1, v2, v3, v4, eps):
    q0 = 0.375 * v0 - 1.25 * v1 + 1.875 * v2
    q1 = -0.125 * v1 + 0.75 * v2 + 0.375 * v3
    q2 = 0.375 * v2 + 0.75 * v3 - 0.125 * v4
    w0, w1, w2 = weno5_weights(v0, v1, v2, v3, v4, eps)
    return w0 * q0 + w1 * q1 + w2 * q2


@_jit
def eigen_rotated(rho, un, ut, p, gamma, L, R):
    """Fill left/right eigenvectors of the normal-direction flux Jacobian.

    Conservative components are ordered (rho, rho*un, rho*ut, E); eigenvalues
    are (un - c, un, un, un + c).
    """
    gm = gamma - 1.0
    c = np.sqrt(gamma * p / rho)
    ic = 1.0 / c
    q2 = un * un + ut * ut
    H = c * c / gm + 0.5 * q2
    b1 = gm / (c * c)
    b2 = 0.5 * b1 * q2
    unc = un * c
    R[0, 0] = 1.0
    R[1, 0] = un - c
    R[2, 0] = ut
    R[3, 0] = H - unc
    R[0, 1] = 1.0
    R[1, 1] = un
    R[2, 1] = ut
    R[3, 1] = 0.5 * q2
    R[0, 2] = 0.0
    R[1, 2] = 0.0
    R[2, 2] = 1.0
    R[3, 2] = ut
    R[0, 3] = 1.0
    R[1, 3] = un + c
    R[2, 3] = ut
    R[3, 3] = H + unc

    unic = un * ic
    b1un = b1 * un
    b1ut = b1 * ut
    L[0, 0] = 0.5 * (b2 + unic)
    L[0, 1] = 0.5 * (-b1un - ic)
    L[0, 2] = -0.5 * b1ut
    L[0, 3] = 0.5 * b1
    L[1, 0] = 1.0 - b2
    L[1, 1] = b1un
    L[1, 2] = b1ut
    L[1, 3] = -b1
    L[2, 0] = -ut
    L[2, 1] = 0.0
    L[2, 2] = 1.0
    L[2, 3] = 0.0
    L[3, 0] = 0.5 * (b2 - unic)
    L[3, 1] = 0.5 * (-b1un + ic)
    L[3, 2] = -0.5 * b1ut
    L[3, 3] = 0.5 * b1
    return c


@_jit
def to_primitive(u, w, gamma):
    """Primitive (rho, u, v, p) over the whole array; returns first bad flat index or -1."""
    gm = gamma - 1.0
    m0 = u.shape[1]
    m1 = u.shape[2]
    bad = -1
    for i in range(m0):
        for j in range(m1):
            rho = u[0, i, j]
            if not rho > 0.0:
                if bad < 0:
                    bad = i * m1 + j
                rho = 1.0
            vx = u[1, i, j] / rho
            vy = u[2, i, j] / rho
            p = gm * (u[3, i, j] - 0.5 * (u[1, i, j] * vx + u[2, i, j] * vy))
            if not p > 0.0 and bad < 0:
                bad = i * m1 + j
            w[0, i, j] = rho
            w[1, i, j] = vx
            w[2, i, j] = vy
            w[3, i, j] = p
    return bad


@_jit
def interp_central(w, ng, n, inrm, itan, we):
    """4th-order midpoint interpolation of primitives to the sweep edges."""
    for e in range(n + 3):
        s = e + ng - 2
        for j in range(n):
            jj = ng + j
            for k in range(4):
                kk = k
                if k == 1:
                    kk = inrm
                elif k == 2:
                    kk = itan
                we[k, e, j] = C9_16 * (w[kk, s, jj] + w[kk, s + 1, jj]) \
                    - C1_16 * (w[kk, s - 1, jj] + w[kk, s + 2, jj])


@_jit
def flux_central(we, gamma, n, inrm, itan, f):
    """Euler flux from edge primitives stored in the rotated frame."""
    gg = gamma / (gamma - 1.0)
    for e in range(n + 3):
        for j in range(n):
            rho = we[0, e, j]
            un = we[1, e, j]
            ut = we[2, e, j]
            p = we[3, e, j]
            mn = rho * un
            f[0, e, j] = mn
            f[inrm, e, j] = mn * un + p
            f[itan, e, j] = mn * ut
            f[3, e, j] = (gg * p + 0.5 * rho * (un * un + ut * ut)) * un


@_jit
def _eigen_tuples(rho, un, ut, p, gamma):
    """Rows of L and columns of R from eigen_rotated, as register-resident tuples."""
    gm = gamma - 1.0
    c = np.sqrt(gamma * p / rho)
    ic = 1.0 / c
    q2 = un * un + ut * ut
    H = c * c / gm + 0.5 * q2
    b1 = gm / (c * c)
    b2 = 0.5 * b1 * q2
    unc = un * c
    unic = un * ic
    b1un = b1 * un
    b1ut = b1 * ut
    l0 = (0.5 * (b2 + unic), 0.5 * (-b1un - ic), -0.5 * b1ut, 0.5 * b1)
    l1 = (1.0 - b2, b1un, b1ut, -b1)
    l2 = (-ut, 0.0, 1.0, 0.0)
    l3 = (0.5 * (b2 - unic), 0.5 * (-b1un + ic), -0.5 * b1ut, 0.5 * b1)
    r0 = (1.0, un - c, ut, H - unc)
    r1 = (1.0, un, ut, 0.5 * q2)
    r2 = (0.0, 0.0, 1.0, ut)
    r3 = (1.0, un + c, ut, H + unc)
    return l0, l1, l2, l3, r0, r1, r2, r3


@_jit
def _dot(l, a, b, c, d):
    return l[0] * a + l[1] * b + l[2] * c + l[3] * d


@_jit
def _weno_pair(c0, c1, c2, c3, c4, c5, eps):
    return weno5_left(c0, c1, c2, c3, c4, eps), weno5_left(c5, c4, c3, c2, c1, eps)


@_jit
def _weno_char(l, a, b, c, d, eps):
    """Project six stencil states onto one characteristic field and interpolate both ways."""
    return _weno_pair(_dot(l, a[0], b[0], c[0], d[0]), _dot(l, a[1], b[1], c[1], d[1]),
                      _dot(l, a[2], b[2], c[2], d[2]), _dot(l, a[3], b[3], c[3], d[3]),
                      _dot(l, a[4], b[4], c[4], d[4]), _dot(l, a[5], b[5], c[5], d[5]), eps)


@_jit
def interp_weno(u, w, ng, n, gamma, eps, characteristic, inrm, itan, ul, ur):
    """Left/right-biased WENO5 edge states, stored rotated as (rho, rho*un, rho*ut, E)."""
    for e in range(n + 3):
        s = e + ng - 2
        for j in range(n):
            jj = ng + j
            # stencil of six nodes per rotated conservative variable
            a = (u[0, s - 2, jj], u[0, s - 1, jj], u[0, s, jj],
                 u[0, s + 1, jj], u[0, s + 2, jj], u[0, s + 3, jj])
            b = (u[inrm, s - 2, jj], u[inrm, s - 1, jj], u[inrm, s, jj],
                 u[inrm, s + 1, jj], u[inrm, s + 2, jj], u[inrm, s + 3, jj])
            c = (u[itan, s - 2, jj], u[itan, s - 1, jj], u[itan, s, jj],
                 u[itan, s + 1, jj], u[itan, s + 2, jj], u[itan, s + 3, jj])
            d = (u[3, s - 2, jj], u[3, s - 1, jj], u[3, s, jj],
                 u[3, s + 1, jj], u[3, s + 2, jj], u[3, s + 3, jj])
            if characteristic:
                rho = 0.5 * (w[0, s, jj] + w[0, s + 1, jj])
                un = 0.5 * (w[inrm, s, jj] + w[inrm, s + 1, jj])
                ut = 0.5 * (w[itan, s, jj] + w[itan, s + 1, jj])
                p = 0.5 * (w[3, s, jj] + w[3, s + 1, jj])
                l0, l1, l2, l3, r0, r1, r2, r3 = _eigen_tuples(rho, un, ut, p, gamma)
                wl0, wr0 = _weno_char(l0, a, b, c, d, eps)
                wl1, wr1 = _weno_char(l1, a, b, c, d, eps)
                wl2, wr2 = _weno_char(l2, a, b, c, d, eps)
                wl3, wr3 = _weno_char(l3, a, b, c, d, eps)
                for k in range(4):
                    ul[k, e, j] = (r0[k] * wl0 + r3[k] * wl3) + (r1[k] * wl1 + r2[k] * wl2)
                    ur[k, e, j] = (r0[k] * wr0 + r3[k] * wr3) + (r1[k] * wr1 + r2[k] * wr2)
            else:
                ul[0, e, j], ur[0, e, j] = _weno_pair(a[0], a[1], a[2], a[3], a[4], a[5], eps)
                ul[1, e, j], ur[1, e, j] = _weno_pair(b[0], b[1], b[2], b[3], b[4], b[5], eps)
                ul[2, e, j], ur[2, e, j] = _weno_pair(c[0], c[1], c[2], c[3], c[4], c[5], eps)
                ul[3, e, j], ur[3, e, j] = _weno_pair(d[0], d[1], d[2], d[3], d[4], d[5], eps)


@_jit
def weno_weight_deviation(u, w, ng, n, gamma, eps, characteristic, inrm, itan):
    """Largest |omega_k - d_k| over all sweep edges, both biases, all variables."""
    L = np.empty((4, 4))
    R = np.empty((4, 4))
    st = np.empty((4, 6))
    ch = np.empty((4, 6))
    worst = 0.0
    for e in range(n + 3):
        s = e + ng - 2
        for j in range(n):
            jj = ng + j
            for k in range(6):
                st[0, k] = u[0, s - 2 + k, jj]
                st[1, k] = u[inrm, s - 2 + k, jj]
                st[2, k] = u[itan, s - 2 + k, jj]
                st[3, k] = u[3, s - 2 + k, jj]
            if characteristic:
                rho = 0.5 * (w[0, s, jj] + w[0, s + 1, jj])
                un = 0.5 * (w[inrm, s, jj] + w[inrm, s + 1, jj])
                ut = 0.5 * (w[itan, s, jj] + w[itan, s + 1, jj])
                p = 0.5 * (w[3, s, jj] + w[3, s + 1, jj])
                eigen_rotated(rho, un, ut, p, gamma, L, R)
                for m in range(4):
                    for k in range(6):
                        ch[m, k] = L[m, 0] * st[0, k] + L[m, 1] * st[1, k] \
                            + L[m, 2] * st[2, k] + L[m, 3] * st[3, k]
            else:
                for m in range(4):
                    for k in range(6):
                        ch[m, k] = st[m, k]
            for m in range(4):
                a0, a1, a2 = weno5_weights(ch[m, 0], ch[m, 1], ch[m, 2], ch[m, 3], ch[m, 4], eps)
                worst = max(worst, abs(a0 - D0), abs(a1 - D1), abs(a2 - D2))
                a0, a1, a2 = weno5_weights(ch[m, 5], ch[m, 4], ch[m, 3], ch[m, 2], ch[m, 1], eps)
                worst = max(worst, abs(a0 - D0), abs(a1 - D1), abs(a2 - D2))
    return worst


@_jit
def flux_rusanov(ul, ur, gamma, n, inrm, itan, f):
    """Rusanov flux from rotated edge states; returns first bad flat edge index or -1."""
    gm = gamma - 1.0
    bad = -1
    for e in range(n + 3):
        for j in range(n):
            rl = ul[0, e, j]
            rr = ur[0, e, j]
            if not (rl > 0.0 and rr > 0.0):
                if bad < 0:
                    bad = e * n + j
                continue
            unl = ul[1, e, j] / rl
            utl = ul[2, e, j] / rl
            unr = ur[1, e, j] / rr
            utr = ur[2, e, j] / rr
            pl = gm * (ul[3, e, j] - 0.5 * (ul[1, e, j] * unl + ul[2, e, j] * utl))
            pr = gm * (ur[3, e, j] - 0.5 * (ur[1, e, j] * unr + ur[2, e, j] * utr))
            if not (pl > 0.0 and pr > 0.0):
                if bad < 0:
                    bad = e * n + j
                continue
            cl = np.sqrt(gamma * pl / rl)
            cr = np.sqrt(gamma * pr / rr)
            sp = max(cr + abs(unr), cl + abs(unl))
            fl0 = ul[1, e, j]
            fr0 = ur[1, e, j]
            fl1 = ul[1, e, j] * unl + pl
            fr1 = ur[1, e, j] * unr + pr
            fl2 = ul[2, e, j] * unl
            fr2 = ur[2, e, j] * unr
            fl3 = (ul[3, e, j] + pl) * unl
            fr3 = (ur[3, e, j] + pr) * unr
            f[0, e, j] = 0.5 * (fl0 + fr0) - 0.5 * sp * (rr - rl)
            f[inrm, e, j] = 0.5 * (fl1 + fr1) - 0.5 * sp * (ur[1, e, j] - ul[1, e, j])
            f[itan, e, j] = 0.5 * (fl2 + fr2) - 0.5 * sp * (ur[2, e, j] - ul[2, e, j])
            f[3, e, j] = 0.5 * (fl3 + fr3) - 0.5 * sp * (ur[3, e, j] - ul[3, e, j])
    return bad


@_jit
def divergence(f, ng, n, inv_dx, rhs, accumulate):
    """rhs = -dF/dx (or rhs -= dF/dx) at interior nodes from edge fluxes."""
    for i in range(n):
        ii = ng + i
        for j in range(n):
            jj = ng + j
            for k in range(4):
                d = (C9_8 * (f[k, i + 2, j] - f[k, i + 1, j])
                     - C1_24 * (f[k, i + 3, j] - f[k, i, j])) * inv_dx
                if accumulate:
                    rhs[k, ii, jj] = rhs[k, ii, jj] - d
                else:
                    rhs[k, ii, jj] = -d


@_jit
def rk_stage(stage, u0, u1, u2, rhs, dt, ng, n):
    """Shu-Osher SSP-RK3 stage update on the interior nodes."""
    for k in range(4):
        for i in range(ng, ng + n):
            for j in range(ng, ng + n):
                if stage == 0:
                    u1[k, i, j] = u0[k, i, j] + dt * rhs[k, i, j]
                elif stage == 1:
                    u2[k, i, j] = 0.75 * u0[k, i, j] + 0.25 * (u1[k, i, j] + dt * rhs[k, i, j])
                else:
                    u0[k, i, j] = (1.0 / 3.0) * u0[k, i, j] \
                        + (2.0 / 3.0) * (u2[k, i, j] + dt * rhs[k, i, j])


@_jit
def max_wave_rate(u, ng, n, gamma, inv_dx, inv_dy):
    """max over interior of (|u|+c)/dx + (|v|+c)/dy; negative if a state is invalid."""
    gm = gamma - 1.0
    worst = 0.0
    for i in range(ng, ng + n):
        for j in range(ng, ng + n):
            rho = u[0, i, j]
            if not rho > 0.0:
                return -1.0
            vx = u[1, i, j] / rho
            vy = u[2, i, j] / rho
            p = gm * (u[3, i, j] - 0.5 * (u[1, i, j] * vx + u[2, i, j] * vy))
            if not p > 0.0:
                return -1.0
            c = np.sqrt(gamma * p / rho)
            r = (abs(vx) + c) * inv_dx + (abs(vy) + c) * inv_dy
            if r > worst:
                worst = r
    return worst
