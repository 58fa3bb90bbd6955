"""Trap potential, minimum search and the full characterization chain.

The potential of a low-field-seeking atom is m_F*g_F*mu_B*|B(r)| - m*g*z,
with z measured downward from the chip surface (the chip hangs upside down,
so gravitational potential decreases with increasing z).
"""

from dataclasses import dataclass, fields as dataclass_fields
import math

import numpy as np
from scipy.optimize import minimize

from .errors import (
    ConvergenceError,
    SaddlePointError,
    TrapLossError,
    ZeroFieldError,
)
from .fields import (
    field_spatial_gradient,
    field_spatial_hessian,
    total_field,
)


@dataclass(frozen=True)
class PhysicalConstants:
    """Rb-87 |F=2, m_F=2> constants used throughout the simulation."""

    g_f: float = 0.5
    mu_b: float = 9.27e-24      # J/T
    mass: float = 1.44e-25      # kg
    m_f: float = 2.0
    g_grav: float = 9.81        # m/s^2
    hbar: float = 1.0546e-34    # J*s
    a_s: float = 5.2e-9         # m
    k_b: float = 1.380649e-23   # J/K
    atom_number: float = 1e5

    def __post_init__(self):
        for field in dataclass_fields(self):
            if not getattr(self, field.name) > 0:
                raise ValueError(f"{field.name} must be strictly positive")

    @property
    def zeeman_coefficient(self):
        """m_F * g_F * mu_B, joules per tesla."""
        return self.m_f * self.g_f * self.mu_b


RB87 = PhysicalConstants()

# Minimum search stays inside this box; walking into the wires (z < 0.05 mm)
# or out of the wire array signals trap loss, not a found minimum.
BOUNDING_BOX = ((-3e-3, 3e-3), (-2e-3, 2e-3), (0.05e-3, 2e-3))

SIMPLEX_SCALE = 1e-5        # m, initial simplex edge
SIMPLEX_XATOL = 1e-10       # m, simplex diameter at convergence
SIMPLEX_FATOL = 1e-32       # J, function spread at convergence
SIMPLEX_MAX_ITER = 2000
GRADIENT_TOL = 1e-22        # J/m, stationarity guarantee at the result
_BOUNDARY_TOL = 1e-9
_MIN_FIELD = 1e-12          # T, below this the trap is in a spin-flip region


@dataclass(frozen=True)
class TrapMetrics:
    """Full characterization of one trap state."""

    r_min: np.ndarray        # m
    u_min: float             # J
    hessian: np.ndarray      # J/m^2
    eigenvalues: np.ndarray  # J/m^2, ascending
    eigenvectors: np.ndarray # orthonormal columns
    omega: np.ndarray        # rad/s
    freq_hz: np.ndarray      # Hz
    omega_bar: float         # rad/s
    a_ho: float              # m
    mu_chem: float           # J
    r_tf: np.ndarray         # m

    def __post_init__(self):
        for name in ("r_min", "hessian", "eigenvalues", "eigenvectors",
                     "omega", "freq_hz", "r_tf"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def potential(layout, currents, point, constants=RB87):
    """Zeeman plus gravitational potential energy, joules."""
    b = total_field(layout, currents, point)
    z = float(np.asarray(point, dtype=float)[2])
    return constants.zeeman_coefficient * float(np.linalg.norm(b)) \
        - constants.mass * constants.g_grav * z


def potential_gradient(layout, currents, point, constants=RB87):
    """Spatial gradient of the potential, J/m."""
    b = total_field(layout, currents, point)
    bmag = float(np.linalg.norm(b))
    if bmag < _MIN_FIELD:
        raise ZeroFieldError(f"|B| = {bmag} T at {point}")
    grad_b = field_spatial_gradient(layout, currents, point)
    grad = constants.zeeman_coefficient * (b @ grad_b) / bmag
    grad[2] -= constants.mass * constants.g_grav
    return grad


def hessian(layout, currents, r_min, constants=RB87):
    """Analytic Hessian of the potential at a stationary point, J/m^2."""
    b = total_field(layout, currents, r_min)
    bmag = float(np.linalg.norm(b))
    if bmag < _MIN_FIELD:
        raise ZeroFieldError(f"|B| = {bmag} T at {r_min}")
    grad_b = field_spatial_gradient(layout, currents, r_min)
    curv_b = field_spatial_hessian(layout, currents, r_min)
    slope = b @ grad_b
    hess = (grad_b.T @ grad_b + np.einsum("m,mij->ij", b, curv_b)) / bmag \
        - np.outer(slope, slope) / bmag**3
    return constants.zeeman_coefficient * hess


def simplex_minimize(fn, guess, bounds=BOUNDING_BOX):
    """Nelder-Mead with the trap-scale termination criteria.

    Coefficients are the standard reflection 1 / expansion 2 / contraction
    0.5 / shrink 0.5 set; converges when the simplex diameter is below
    SIMPLEX_XATOL and the function spread below SIMPLEX_FATOL.
    """
    guess = np.asarray(guess, dtype=float)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    if np.any(guess < lo) or np.any(guess > hi):
        raise ValueError(f"guess {guess} outside the bounding box")
    simplex = np.vstack([guess] + [guess + SIMPLEX_SCALE * e
                                   for e in np.eye(3)])
    result = minimize(
        fn,
        guess,
        method="Nelder-Mead",
        bounds=bounds,
        options=dict(
            xatol=SIMPLEX_XATOL,
            fatol=SIMPLEX_FATOL,
            maxiter=SIMPLEX_MAX_ITER,
            maxfev=40 * SIMPLEX_MAX_ITER,
            initial_simplex=simplex,
        ),
    )
    if not result.success:
        raise ConvergenceError(
            f"simplex search did not converge: {result.message}"
        )
    at_bound = np.any(result.x - lo <= _BOUNDARY_TOL) or \
        np.any(hi - result.x <= _BOUNDARY_TOL)
    if at_bound:
        raise TrapLossError(
            f"minimizer stopped on the bounding box at {result.x}"
        )
    return np.asarray(result.x, dtype=float)


def find_minimum(layout, currents, guess, constants=RB87):
    """Locate the local potential minimum near ``guess``."""
    currents = layout.check_currents(currents)

    def objective(p):
        return potential(layout, currents, p, constants)

    r_min = simplex_minimize(objective, guess)
    grad = potential_gradient(layout, currents, r_min, constants)
    gnorm = float(np.linalg.norm(grad))
    if gnorm >= GRADIENT_TOL:
        raise ConvergenceError(
            f"stationarity check failed: |grad U| = {gnorm:.3e} J/m"
        )
    return r_min


def _signed_eigh(matrix):
    """eigh with a deterministic eigenvector sign: the largest-magnitude
    component of each eigenvector is made positive."""
    values, vectors = np.linalg.eigh(matrix)
    for i in range(vectors.shape[1]):
        col = vectors[:, i]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, i] = -col
    return values, vectors


def chemical_potential(omega, constants=RB87):
    """Thomas-Fermi chemical potential for the given trap frequencies, J."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError(f"trap frequencies must be positive, got {omega}")
    omega_bar = float(np.cbrt(np.prod(omega)))
    a_ho = math.sqrt(constants.hbar / (constants.mass * omega_bar))
    return 0.5 * constants.hbar * omega_bar * (
        15.0 * constants.atom_number * constants.a_s / a_ho
    ) ** 0.4


def metrics_from_hessian(hess, r_min, u_min, constants=RB87):
    """Eigensystem, frequencies, chemical potential and TF radii for a
    trap with the given Hessian.  Raises SaddlePointError unless positive
    definite."""
    values, vectors = _signed_eigh(np.asarray(hess, dtype=float))
    if values[0] <= 0:
        raise SaddlePointError(
            f"stationary point at {r_min} has eigenvalues {values}"
        )
    omega = np.sqrt(values / constants.mass)
    omega_bar = float(np.cbrt(np.prod(omega)))
    a_ho = math.sqrt(constants.hbar / (constants.mass * omega_bar))
    mu_chem = chemical_potential(omega, constants)
    r_tf = np.sqrt(2.0 * mu_chem / (constants.mass * omega**2))
    return TrapMetrics(
        r_min=np.asarray(r_min, dtype=float),
        u_min=float(u_min),
        hessian=np.asarray(hess, dtype=float),
        eigenvalues=values,
        eigenvectors=vectors,
        omega=omega,
        freq_hz=omega / (2.0 * math.pi),
        omega_bar=omega_bar,
        a_ho=a_ho,
        mu_chem=mu_chem,
        r_tf=r_tf,
    )


def characterize(layout, currents, guess, constants=RB87):
    """Find the minimum near ``guess`` and compute all trap metrics."""
    currents = layout.check_currents(currents)
    r_min = find_minimum(layout, currents, guess, constants)
    hess = hessian(layout, currents, r_min, constants)
    u_min = potential(layout, currents, r_min, constants)
    return metrics_from_hessian(hess, r_min, u_min, constants)


def adiabaticity(v_x, omega_1, r_tf_1):
    """Instantaneous adiabaticity parameter |v| / (omega * R_TF/sqrt(5))."""
    if omega_1 <= 0 or r_tf_1 <= 0:
        raise ValueError("omega_1 and r_tf_1 must be positive")
    return abs(v_x) / (omega_1 * r_tf_1 / math.sqrt(5.0))


def principal_axis_along(eigenvectors, lab_axis):
    """Index of the eigenvector column best aligned with ``lab_axis``."""
    overlaps = np.abs(np.asarray(lab_axis, dtype=float) @ eigenvectors)
    return int(np.argmax(overlaps))
