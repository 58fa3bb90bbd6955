"""One-time bias-field calibration for the reference layout.

The source chip's bias magnitudes are not public, so the reference layout
fixes its bias by construction: the y-component is root-found so that the
known-good initial currents place the trap minimum at the documented height
(z = 0.33 mm).  The frozen result lives in ``geometry.BIAS_Y``; this module
exists so the number is reproducible.
"""

from scipy.optimize import brentq

from .geometry import BIAS_X, ChipLayout, initial_currents, reference_layout
from .trap import RB87, find_minimum

TARGET_HEIGHT = 0.33e-3


def layout_with_bias(bias, base=None):
    """Reference layout with the bias vector replaced."""
    base = base or reference_layout()
    return ChipLayout(
        prisms=base.prisms,
        bias=bias,
        channel_count=base.channel_count,
        channel_groups=base.channel_groups,
        clip_limits=base.clip_limits,
    )


def trap_height(bias_y, bias_x, constants=RB87):
    """Trap z for the reference geometry under the given bias, meters."""
    layout = layout_with_bias((bias_x, bias_y, 0.0))
    r_min = find_minimum(layout, initial_currents(), (0.0, 0.0, 0.3e-3),
                         constants)
    return float(r_min[2])


def calibrate_bias_y(bias_x=BIAS_X, target_z=TARGET_HEIGHT,
                     bracket=(-8.6e-4, -7.6e-4), xtol=1e-13, constants=RB87):
    """Root-find the bias y-component that puts the trap at ``target_z``.

    Trap height falls monotonically with bias_y over the bracket, so a
    scalar root-find suffices.
    """
    def residual(bias_y):
        return trap_height(bias_y, bias_x, constants) - target_z

    return float(brentq(residual, *bracket, xtol=xtol))
