"""Magnetic fields of the chip wires: closed-form prisms plus superposition.

All evaluation points must lie strictly outside every conductor (clearance
greater than 1 nm); anything closer raises SingularEvaluationError rather
than extrapolating.
"""

from functools import lru_cache

import numpy as np

from . import kernels
from .errors import SingularEvaluationError

_Z = np.array([0.0, 0.0, 1.0])
_Y = np.array([0.0, 1.0, 0.0])


def _frame(direction):
    """Canonical local frame (columns: current, width, height axes), sign.

    The direction is canonicalized so its first nonzero component is
    positive; the returned sign restores the requested orientation.  This
    makes the field of a direction-reversed prism the exact negation of the
    original (same frame, flipped coefficient).
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    sign = 1.0
    for comp in d:
        if comp != 0.0:
            sign = 1.0 if comp > 0.0 else -1.0
            break
    dc = sign * d
    e_w = np.cross(_Z, dc)
    norm = np.linalg.norm(e_w)
    if norm < 1e-9:  # vertical wire: width axis falls back to y x d
        e_w = np.cross(_Y, dc)
        norm = np.linalg.norm(e_w)
    e_w = e_w / norm
    e_h = np.cross(dc, e_w)
    return np.column_stack([dc, e_w, e_h]), sign


def _build_stack(prisms):
    n = len(prisms)
    centers = np.empty((n, 3))
    rot = np.empty((n, 3, 3))
    half = np.empty((n, 3))
    channel = np.empty(n, dtype=np.int64)
    coef = np.empty(n)
    for i, prism in enumerate(prisms):
        centers[i] = prism.center
        rot[i], sign = _frame(prism.direction)
        half[i] = (prism.length / 2, prism.width / 2, prism.height / 2)
        channel[i] = prism.channel_index
        coef[i] = sign * kernels.MU0_OVER_4PI / (prism.width * prism.height)
    for arr in (centers, rot, half, channel, coef):
        arr.setflags(write=False)
    return centers, rot, half, channel, coef


@lru_cache(maxsize=16)
def _layout_stack(layout):
    return _build_stack(layout.prisms)


def _point(point):
    arr = np.asarray(point, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"point must be a 3-vector, got shape {arr.shape}")
    return arr


def _check(bad, point):
    if bad >= 0:
        raise SingularEvaluationError(bad, tuple(point))


def prism_field_per_ampere(prism, point):
    """Field of a single prism carrying 1 A, tesla/ampere."""
    point = _point(point)
    centers, rot, half, channel, coef = _build_stack([prism])
    out, bad = kernels.channel_fields(
        centers, rot, half, channel, coef, 1, point
    )
    _check(bad, point)
    return out[0]


def basis_fields(layout, point):
    """Per-channel unit-current fields, shape (channel_count, 3), T/A."""
    point = _point(point)
    out, bad = kernels.channel_fields(
        *_layout_stack(layout), layout.channel_count, point
    )
    _check(bad, point)
    return out


def total_field(layout, currents, point):
    """Bias plus superposed wire fields, tesla."""
    currents = layout.check_currents(currents)
    return layout.bias + currents @ basis_fields(layout, point)


def basis_field_gradients(layout, point):
    """Per-channel spatial gradients d(b_i)/d(r_j), (channel_count, 3, 3)."""
    point = _point(point)
    out, bad = kernels.channel_gradients(
        *_layout_stack(layout), layout.channel_count, point
    )
    _check(bad, point)
    return out


def field_spatial_gradient(layout, currents, point):
    """Gradient dB_i/dr_j of the total field, (3, 3), tesla/meter.

    The bias is uniform so only wire terms contribute; outside conductors
    the result is symmetric and traceless (curl- and divergence-free).
    """
    currents = layout.check_currents(currents)
    grads = basis_field_gradients(layout, point)
    return np.einsum("c,cij->ij", currents, grads)


def basis_field_hessians(layout, point):
    """Per-channel curvature d2(b_m)/dr_i dr_j, (channel_count, 3, 3, 3)."""
    point = _point(point)
    out, bad = kernels.channel_hessians(
        *_layout_stack(layout), layout.channel_count, point
    )
    _check(bad, point)
    return out


def field_spatial_hessian(layout, currents, point):
    """Curvature d2(B_m)/dr_i dr_j of the total field, (3, 3, 3)."""
    currents = layout.check_currents(currents)
    hess = basis_field_hessians(layout, point)
    return np.einsum("c,cmij->mij", currents, hess)
