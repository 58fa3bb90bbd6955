"""Vectorized numpy implementation of the prism-field corner sums.

A rectangular prism carrying uniform current density along its local u-axis
produces a field with no u-component.  Writing (u, v, w) for the evaluation
point relative to a prism corner and rho = sqrt(u^2 + v^2 + w^2), the triple
antiderivatives of the Biot-Savart integrand are

    G_y(u, v, w) = -u*artanh(v/rho) - v*ln(u + rho) + w*arctan(u*v/(w*rho))
    G_z(u, v, w) =  G_y(u, w, v)

and the per-ampere field components are alternating sums of G over the eight
corner offsets, scaled by mu0/(4*pi*width*height):

    b_v = +q * S[G_y],    b_w = -q * S[G_z],    b_u = 0.

First and second spatial derivatives follow by differentiating G under the
corner sum; all formulas below are those derivatives.  Evaluations inside a
prism or within SURFACE_CLEARANCE of its surface are rejected (the corner
terms are singular there); the functions return the offending prism index
instead of raising so the numba twin can share the calling convention.
"""

import numpy as np

MU0_OVER_4PI = 1e-7
SURFACE_CLEARANCE = 1e-9
_TINY = 1e-300

_SIGNS = np.array([-1.0, 1.0])


def _local_coords(centers, rot, point):
    dx = point[None, :] - centers
    return np.einsum("pji,pj->pi", rot, dx)


def _bad_prism(loc, half):
    """Index of the first prism the point is inside/too close to, else -1."""
    a = np.abs(loc) - half
    inside = np.all(a < 0.0, axis=1)
    clearance = np.linalg.norm(np.maximum(a, 0.0), axis=1)
    bad = inside | (clearance <= SURFACE_CLEARANCE)
    if np.any(bad):
        return int(np.argmax(bad))
    return -1


def _corner_grids(loc, half):
    uu = loc[:, 0, None] + _SIGNS[None, :] * half[:, 0, None]
    vv = loc[:, 1, None] + _SIGNS[None, :] * half[:, 1, None]
    ww = loc[:, 2, None] + _SIGNS[None, :] * half[:, 2, None]
    uu = uu[:, :, None, None]
    vv = vv[:, None, :, None]
    ww = ww[:, None, None, :]
    rho = np.sqrt(uu * uu + vv * vv + ww * ww)
    sgn = (
        _SIGNS[:, None, None] * _SIGNS[None, :, None] * _SIGNS[None, None, :]
    )
    return uu, vv, ww, rho, sgn


def _artanh(a, rho):
    # 0.5*log((rho+a)/(rho-a)); clamped so degenerate corner alignments
    # (a -> +-rho, always multiplied by a vanishing factor) stay finite.
    return 0.5 * (
        np.log(np.maximum(rho + a, _TINY)) - np.log(np.maximum(rho - a, _TINY))
    )


def _safe_log(x):
    return np.log(np.maximum(x, _TINY))


def _atan_term(a, b, c, rho):
    """arctan(a*b/(c*rho)), defined as 0 where c == 0."""
    denom = np.where(c == 0.0, 1.0, c * rho)
    return np.where(c == 0.0, 0.0, np.arctan(a * b / denom))


def _reduce(sgn, term):
    return np.einsum("ijk,pijk->p", sgn, term)


def channel_fields(centers, rot, half, channel, coef, n_channels, point):
    """Per-channel per-ampere field at one point, shape (n_channels, 3)."""
    loc = _local_coords(centers, rot, point)
    bad = _bad_prism(loc, half)
    out = np.zeros((n_channels, 3))
    if bad >= 0:
        return out, bad

    uu, vv, ww, rho, sgn = _corner_grids(loc, half)
    g_y = (
        -uu * _artanh(vv, rho)
        - vv * _safe_log(uu + rho)
        + ww * _atan_term(uu, vv, ww, rho)
    )
    g_z = (
        -uu * _artanh(ww, rho)
        - ww * _safe_log(uu + rho)
        + vv * _atan_term(uu, ww, vv, rho)
    )
    b_v = coef * _reduce(sgn, g_y)
    b_w = -coef * _reduce(sgn, g_z)
    b_lab = b_v[:, None] * rot[:, :, 1] + b_w[:, None] * rot[:, :, 2]
    np.add.at(out, channel, b_lab)
    return out, bad


def channel_gradients(centers, rot, half, channel, coef, n_channels, point):
    """Per-channel spatial gradient d(b_i)/d(r_j), shape (n_channels, 3, 3)."""
    loc = _local_coords(centers, rot, point)
    bad = _bad_prism(loc, half)
    out = np.zeros((n_channels, 3, 3))
    if bad >= 0:
        return out, bad

    uu, vv, ww, rho, sgn = _corner_grids(loc, half)
    at_uv = _artanh(vv, rho)
    at_uw = _artanh(ww, rho)
    at_u = _artanh(uu, rho)

    n_prisms = centers.shape[0]
    grad_loc = np.zeros((n_prisms, 3, 3))
    # row 1: d(b_v)/d(u,v,w); row 2: d(b_w)/d(u,v,w); row 0 is zero.
    grad_loc[:, 1, 0] = coef * _reduce(sgn, -at_uv)
    grad_loc[:, 1, 1] = coef * _reduce(sgn, -at_u)
    grad_loc[:, 1, 2] = coef * _reduce(sgn, _atan_term(uu, vv, ww, rho))
    grad_loc[:, 2, 0] = -coef * _reduce(sgn, -at_uw)
    grad_loc[:, 2, 1] = -coef * _reduce(sgn, _atan_term(uu, ww, vv, rho))
    grad_loc[:, 2, 2] = -coef * _reduce(sgn, -at_u)

    grad_lab = np.einsum("pim,pmn,pjn->pij", rot, grad_loc, rot)
    out = np.zeros((n_channels, 3, 3))
    np.add.at(out, channel, grad_lab)
    return out, bad


def channel_hessians(centers, rot, half, channel, coef, n_channels, point):
    """Per-channel field curvature d2(b_m)/d(r_i)d(r_j), (n_channels, 3, 3, 3)."""
    loc = _local_coords(centers, rot, point)
    bad = _bad_prism(loc, half)
    out = np.zeros((n_channels, 3, 3, 3))
    if bad >= 0:
        return out, bad

    uu, vv, ww, rho, sgn = _corner_grids(loc, half)
    uw2 = np.maximum(uu * uu + ww * ww, _TINY)
    vw2 = np.maximum(vv * vv + ww * ww, _TINY)
    uv2 = np.maximum(uu * uu + vv * vv, _TINY)
    rho2 = rho * rho

    n_prisms = centers.shape[0]
    hess_y = np.zeros((n_prisms, 3, 3))
    hess_y[:, 0, 0] = _reduce(sgn, uu * vv / (rho * uw2))
    hess_y[:, 0, 1] = _reduce(sgn, -1.0 / rho)
    hess_y[:, 0, 2] = _reduce(sgn, vv * ww / (rho * uw2))
    hess_y[:, 1, 1] = _reduce(sgn, uu * vv / (rho * vw2))
    hess_y[:, 1, 2] = _reduce(sgn, uu * ww / (rho * vw2))
    hess_y[:, 2, 2] = _reduce(sgn, -uu * vv * (rho2 + ww * ww) / (rho * uw2 * vw2))

    hess_z = np.zeros((n_prisms, 3, 3))
    hess_z[:, 0, 0] = _reduce(sgn, uu * ww / (rho * uv2))
    hess_z[:, 0, 1] = _reduce(sgn, vv * ww / (rho * uv2))
    hess_z[:, 0, 2] = _reduce(sgn, -1.0 / rho)
    hess_z[:, 1, 1] = _reduce(sgn, -uu * ww * (rho2 + vv * vv) / (rho * uv2 * vw2))
    hess_z[:, 1, 2] = _reduce(sgn, uu * vv / (rho * vw2))
    hess_z[:, 2, 2] = _reduce(sgn, uu * ww / (rho * vw2))

    for hess in (hess_y, hess_z):
        hess[:, 1, 0] = hess[:, 0, 1]
        hess[:, 2, 0] = hess[:, 0, 2]
        hess[:, 2, 1] = hess[:, 1, 2]

    hess_y = hess_y * coef[:, None, None]
    hess_z = hess_z * -coef[:, None, None]

    hy_lab = np.einsum("pim,pmn,pjn->pij", rot, hess_y, rot)
    hz_lab = np.einsum("pim,pmn,pjn->pij", rot, hess_z, rot)
    t_lab = (
        rot[:, :, 1][:, :, None, None] * hy_lab[:, None, :, :]
        + rot[:, :, 2][:, :, None, None] * hz_lab[:, None, :, :]
    )
    np.add.at(out, channel, t_lab)
    return out, bad
