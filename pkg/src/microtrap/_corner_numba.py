"""Numba loop implementation of the prism-field corner sums.

Scalar twin of ``_corner_numpy``; see that module for the formulas.  The two
implementations are cross-checked against each other in the test suite and
against the quadrature oracle.
"""

import math

import numpy as np
from numba import njit

MU0_OVER_4PI = 1e-7
SURFACE_CLEARANCE = 1e-9
_TINY = 1e-300


@njit(cache=True, inline="always")
def _artanh(a, rho):
    return 0.5 * (
        math.log(max(rho + a, _TINY)) - math.log(max(rho - a, _TINY))
    )


@njit(cache=True, inline="always")
def _atan_term(a, b, c, rho):
    if c == 0.0:
        return 0.0
    return math.atan(a * b / (c * rho))


@njit(cache=True, inline="always")
def _local_and_check(centers, rot, half, point, p):
    dx0 = point[0] - centers[p, 0]
    dx1 = point[1] - centers[p, 1]
    dx2 = point[2] - centers[p, 2]
    u = rot[p, 0, 0] * dx0 + rot[p, 1, 0] * dx1 + rot[p, 2, 0] * dx2
    v = rot[p, 0, 1] * dx0 + rot[p, 1, 1] * dx1 + rot[p, 2, 1] * dx2
    w = rot[p, 0, 2] * dx0 + rot[p, 1, 2] * dx1 + rot[p, 2, 2] * dx2
    au = abs(u) - half[p, 0]
    av = abs(v) - half[p, 1]
    aw = abs(w) - half[p, 2]
    if au < 0.0 and av < 0.0 and aw < 0.0:
        ok = False
    else:
        cu = max(au, 0.0)
        cv = max(av, 0.0)
        cw = max(aw, 0.0)
        ok = math.sqrt(cu * cu + cv * cv + cw * cw) > SURFACE_CLEARANCE
    return u, v, w, ok


@njit(cache=True)
def channel_fields(centers, rot, half, channel, coef, n_channels, point):
    n_prisms = centers.shape[0]
    out = np.zeros((n_channels, 3))
    for p in range(n_prisms):
        u, v, w, ok = _local_and_check(centers, rot, half, point, p)
        if not ok:
            return np.zeros((n_channels, 3)), p
        s_y = 0.0
        s_z = 0.0
        for i in range(2):
            uu = u - half[p, 0] if i == 0 else u + half[p, 0]
            si = -1.0 if i == 0 else 1.0
            for j in range(2):
                vv = v - half[p, 1] if j == 0 else v + half[p, 1]
                sj = -si if j == 0 else si
                for k in range(2):
                    ww = w - half[p, 2] if k == 0 else w + half[p, 2]
                    s = -sj if k == 0 else sj
                    rho = math.sqrt(uu * uu + vv * vv + ww * ww)
                    lg = math.log(max(uu + rho, _TINY))
                    g_y = (
                        -uu * _artanh(vv, rho)
                        - vv * lg
                        + ww * _atan_term(uu, vv, ww, rho)
                    )
                    g_z = (
                        -uu * _artanh(ww, rho)
                        - ww * lg
                        + vv * _atan_term(uu, ww, vv, rho)
                    )
                    s_y += s * g_y
                    s_z += s * g_z
        b_v = coef[p] * s_y
        b_w = -coef[p] * s_z
        c = channel[p]
        for m in range(3):
            out[c, m] += b_v * rot[p, m, 1] + b_w * rot[p, m, 2]
    return out, -1


@njit(cache=True)
def channel_gradients(centers, rot, half, channel, coef, n_channels, point):
    n_prisms = centers.shape[0]
    out = np.zeros((n_channels, 3, 3))
    grad_loc = np.zeros((3, 3))
    grad_lab = np.zeros((3, 3))
    for p in range(n_prisms):
        u, v, w, ok = _local_and_check(centers, rot, half, point, p)
        if not ok:
            return np.zeros((n_channels, 3, 3)), p
        gy0 = gy1 = gy2 = 0.0
        gz0 = gz1 = gz2 = 0.0
        for i in range(2):
            uu = u - half[p, 0] if i == 0 else u + half[p, 0]
            si = -1.0 if i == 0 else 1.0
            for j in range(2):
                vv = v - half[p, 1] if j == 0 else v + half[p, 1]
                sj = -si if j == 0 else si
                for k in range(2):
                    ww = w - half[p, 2] if k == 0 else w + half[p, 2]
                    s = -sj if k == 0 else sj
                    rho = math.sqrt(uu * uu + vv * vv + ww * ww)
                    at_u = _artanh(uu, rho)
                    gy0 += s * -_artanh(vv, rho)
                    gy1 += s * -at_u
                    gy2 += s * _atan_term(uu, vv, ww, rho)
                    gz0 += s * -_artanh(ww, rho)
                    gz1 += s * _atan_term(uu, ww, vv, rho)
                    gz2 += s * -at_u
        q = coef[p]
        grad_loc[1, 0] = q * gy0
        grad_loc[1, 1] = q * gy1
        grad_loc[1, 2] = q * gy2
        grad_loc[2, 0] = -q * gz0
        grad_loc[2, 1] = -q * gz1
        grad_loc[2, 2] = -q * gz2
        for a in range(3):
            for b in range(3):
                acc = 0.0
                for m in range(1, 3):
                    for n in range(3):
                        acc += rot[p, a, m] * grad_loc[m, n] * rot[p, b, n]
                grad_lab[a, b] = acc
        c = channel[p]
        for a in range(3):
            for b in range(3):
                out[c, a, b] += grad_lab[a, b]
    return out, -1


@njit(cache=True)
def channel_hessians(centers, rot, half, channel, coef, n_channels, point):
    n_prisms = centers.shape[0]
    out = np.zeros((n_channels, 3, 3, 3))
    hess_y = np.zeros((3, 3))
    hess_z = np.zeros((3, 3))
    hy_lab = np.zeros((3, 3))
    hz_lab = np.zeros((3, 3))
    for p in range(n_prisms):
        u, v, w, ok = _local_and_check(centers, rot, half, point, p)
        if not ok:
            return np.zeros((n_channels, 3, 3, 3)), p
        y00 = y01 = y02 = y11 = y12 = y22 = 0.0
        z00 = z01 = z02 = z11 = z12 = z22 = 0.0
        for i in range(2):
            uu = u - half[p, 0] if i == 0 else u + half[p, 0]
            si = -1.0 if i == 0 else 1.0
            for j in range(2):
                vv = v - half[p, 1] if j == 0 else v + half[p, 1]
                sj = -si if j == 0 else si
                for k in range(2):
                    ww = w - half[p, 2] if k == 0 else w + half[p, 2]
                    s = -sj if k == 0 else sj
                    rho = math.sqrt(uu * uu + vv * vv + ww * ww)
                    rho2 = rho * rho
                    uw2 = max(uu * uu + ww * ww, _TINY)
                    vw2 = max(vv * vv + ww * ww, _TINY)
                    uv2 = max(uu * uu + vv * vv, _TINY)
                    y00 += s * (uu * vv / (rho * uw2))
                    y01 += s * (-1.0 / rho)
                    y02 += s * (vv * ww / (rho * uw2))
                    y11 += s * (uu * vv / (rho * vw2))
                    y12 += s * (uu * ww / (rho * vw2))
                    y22 += s * (-uu * vv * (rho2 + ww * ww) / (rho * uw2 * vw2))
                    z00 += s * (uu * ww / (rho * uv2))
                    z01 += s * (vv * ww / (rho * uv2))
                    z02 += s * (-1.0 / rho)
                    z11 += s * (-uu * ww * (rho2 + vv * vv) / (rho * uv2 * vw2))
                    z12 += s * (uu * vv / (rho * vw2))
                    z22 += s * (uu * ww / (rho * vw2))
        q = coef[p]
        hess_y[0, 0] = q * y00
        hess_y[0, 1] = q * y01
        hess_y[0, 2] = q * y02
        hess_y[1, 1] = q * y11
        hess_y[1, 2] = q * y12
        hess_y[2, 2] = q * y22
        hess_z[0, 0] = -q * z00
        hess_z[0, 1] = -q * z01
        hess_z[0, 2] = -q * z02
        hess_z[1, 1] = -q * z11
        hess_z[1, 2] = -q * z12
        hess_z[2, 2] = -q * z22
        for hess in (hess_y, hess_z):
            hess[1, 0] = hess[0, 1]
            hess[2, 0] = hess[0, 2]
            hess[2, 1] = hess[1, 2]
        for a in range(3):
            for b in range(3):
                acc_y = 0.0
                acc_z = 0.0
                for m in range(3):
                    for n in range(3):
                        rr = rot[p, a, m] * rot[p, b, n]
                        acc_y += rr * hess_y[m, n]
                        acc_z += rr * hess_z[m, n]
                hy_lab[a, b] = acc_y
                hz_lab[a, b] = acc_z
        c = channel[p]
        for m in range(3):
            rm_y = rot[p, m, 1]
            rm_z = rot[p, m, 2]
            for a in range(3):
                for b in range(3):
                    out[c, m, a, b] += rm_y * hy_lab[a, b] + rm_z * hz_lab[a, b]
    return out, -1
