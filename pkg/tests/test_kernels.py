"""Cross-checks between the numba and numpy kernel backends."""

import os
import subprocess
import sys

import numpy as np
import pytest

from microtrap import kernels
from microtrap.fields import _build_stack
from microtrap.geometry import SHIFTING, WirePrism

numba_impl = kernels.implementation("numba")
numpy_impl = kernels.implementation("numpy")


def random_stack(rng, n_prisms=8, n_channels=4):
    prisms = []
    for _ in range(n_prisms):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        prisms.append(
            WirePrism(
                center=rng.uniform(-2e-3, 2e-3, size=3),
                length=10 ** rng.uniform(-3.5, -2.0),
                width=10 ** rng.uniform(-4.5, -3.5),
                height=10 ** rng.uniform(-5.0, -4.0),
                direction=d,
                channel_index=int(rng.integers(n_channels)),
                group=SHIFTING,
            )
        )
    return _build_stack(prisms), prisms


def exterior_point(rng, prisms):
    while True:
        point = rng.uniform(-6e-3, 6e-3, size=3)
        clear = True
        for p in prisms:
            if np.linalg.norm(point - p.center) < 2.0 * p.length:
                clear = False
                break
        if clear:
            return point


@pytest.mark.parametrize("name", ["fields", "gradients", "hessians"])
def test_backends_agree(rng, name):
    stack, prisms = random_stack(rng)
    fn_nb = getattr(numba_impl, f"channel_{name}")
    fn_np = getattr(numpy_impl, f"channel_{name}")
    for _ in range(10):
        point = exterior_point(rng, prisms)
        out_nb, bad_nb = fn_nb(*stack, 4, point)
        out_np, bad_np = fn_np(*stack, 4, point)
        assert bad_nb == bad_np == -1
        scale = np.max(np.abs(out_np))
        assert np.allclose(out_nb, out_np, rtol=0, atol=1e-13 * scale)


def test_backends_flag_same_prism(rng):
    stack, prisms = random_stack(rng)
    inside = prisms[3].center
    _, bad_nb = numba_impl.channel_fields(*stack, 4, inside)
    _, bad_np = numpy_impl.channel_fields(*stack, 4, inside)
    assert bad_nb == bad_np == 3


def test_env_flag_selects_numpy_backend():
    code = (
        "import microtrap.kernels as k; "
        "import microtrap._corner_numpy as np_impl; "
        "assert k.BACKEND == 'numpy'; "
        "assert k.channel_fields is np_impl.channel_fields"
    )
    subprocess.run(
        [sys.executable, "-c", code],
        check=True,
        env={**os.environ, "MICROTRAP_BACKEND": "numpy"},
    )


def test_default_backend_is_numba():
    assert kernels.BACKEND == "numba"


def test_unknown_backend_rejected():
    code = (
        "import microtrap.kernels"
    )
    proc = subprocess.run(
        [sys.executable, "-c", code],
        env={**os.environ, "MICROTRAP_BACKEND": "mystery"},
        capture_output=True,
        text=True,
    )
    assert proc.returncode != 0
    assert "MICROTRAP_BACKEND" in proc.stderr
