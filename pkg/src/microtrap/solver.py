"""Per-step inverse optimization of wire currents.

Each step computes the implicit Jacobian of the trap position with respect
to the wire currents (differentiating the stationarity condition grad U = 0
gives J = -H^-1 * d2U/dr dI), solves a condition-scaled Tikhonov least
squares for the masked current update, clips to the per-group limits, and
re-minimizes to find the new trap center.

The regularized solve runs with lengths expressed in units of 0.1 mm
(scaling the solve by s is identical to scaling alpha by s^2).  With the
reference geometry's position sensitivities (~0.1 mm/A) this puts the
default base regularization 1e-2 in the regime the published results show:
near-exact tracking of well-conditioned directions with the penalty still
damping the weakest one.  Solving in meters would inflate the penalty by
~10^8 and stall the transport.  Everything else in the package is SI.
"""

from dataclasses import dataclass
import logging
import warnings

import numpy as np

from .errors import SingularHessianError, TransportError, ZeroJacobianError, \
    ZeroFieldError, MicrotrapError
from .fields import basis_fields, basis_field_gradients, total_field, \
    field_spatial_gradient
from .geometry import SHIFTING
from .schedule import desired_trajectory
from .trap import RB87, characterize, hessian

log = logging.getLogger(__name__)

_SOLVE_LENGTH_SCALE = 1e-4   # meters per solver length unit
_MIN_FIELD = 1e-12           # T
_MIN_HESSIAN_EIGENVALUE = 1e-30  # J/m^2
_JACOBIAN_RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the per-step inverse solve."""

    mask: np.ndarray             # 1 = optimized channel, 0 = held fixed
    clip_limits: np.ndarray      # per-channel |I| limit, amperes
    base_regularization: float = 1e-2
    forward_threshold: float = 1e-9   # m; skip steps with less x-progress
    max_condition: float = 1e8
    paper_literal_masking: bool = False  # solve full system, mask afterwards

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask entries must be 0 or 1")
        mask = mask.astype(bool)
        mask.setflags(write=False)
        clip = np.asarray(self.clip_limits, dtype=float)
        if np.any(clip <= 0):
            raise ValueError("clip limits must be strictly positive")
        clip.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "clip_limits", clip)
        if not self.base_regularization > 0:
            raise ValueError("base_regularization must be positive")
        if not self.forward_threshold > 0:
            raise ValueError("forward_threshold must be positive")

    @classmethod
    def from_layout(cls, layout, optimize_channels=None, **kwargs):
        """Mask the given channels (default: the shifting group)."""
        if optimize_channels is None:
            optimize_channels = [
                i for i, g in enumerate(layout.channel_groups) if g == SHIFTING
            ]
        mask = np.zeros(layout.channel_count, dtype=int)
        mask[list(optimize_channels)] = 1
        return cls(mask=mask, clip_limits=layout.clip_limit_vector(), **kwargs)


@dataclass(frozen=True)
class StepRecord:
    """One transport step: currents, achieved trap, solver diagnostics."""

    step_index: int
    currents: np.ndarray
    metrics: object              # TrapMetrics
    jacobian_condition: float
    alpha_used: float
    requested_displacement: np.ndarray
    achieved_displacement: np.ndarray
    skipped: bool


@dataclass(frozen=True)
class TransportResult:
    """All step records (index 0 is the initial state) plus the inputs."""

    records: tuple
    plan: object
    config: SolverConfig


def mixed_second_derivative(layout, currents, r_min, constants=RB87):
    """d2U / dr_i dI_k at a stationary point, shape (3, channel_count).

    B is linear in the currents, so the entry reduces to derivatives of
    (B . b_k)/|B| assembled from the per-channel basis fields and their
    spatial gradients.
    """
    currents = layout.check_currents(currents)
    b_total = total_field(layout, currents, r_min)
    bmag = float(np.linalg.norm(b_total))
    if bmag < _MIN_FIELD:
        raise ZeroFieldError(f"|B| = {bmag} T at {r_min}")
    basis = basis_fields(layout, r_min)                  # (C, 3)
    basis_grad = basis_field_gradients(layout, r_min)    # (C, 3, 3)
    total_grad = field_spatial_gradient(layout, currents, r_min)  # (3, 3)

    t1 = np.einsum("cm,mi->ic", basis, total_grad)
    t2 = np.einsum("m,cmi->ic", b_total, basis_grad)
    bg = b_total @ total_grad            # (3,)
    bb = basis @ b_total                 # (C,)
    mixed = (t1 + t2) / bmag - np.outer(bg, bb) / bmag**3
    return constants.zeeman_coefficient * mixed


def position_jacobian(hess, mixed):
    """Implicit trap-position sensitivity J = -H^-1 * mixed, m/A."""
    hess = np.asarray(hess, dtype=float)
    mixed = np.asarray(mixed, dtype=float)
    eigenvalues = np.linalg.eigvalsh(hess)
    if eigenvalues[0] < _MIN_HESSIAN_EIGENVALUE:
        raise SingularHessianError(
            f"smallest Hessian eigenvalue {eigenvalues[0]:.3e} J/m^2"
        )
    jac = np.linalg.solve(hess, -mixed)
    scale = np.linalg.norm(mixed)
    if scale > 0:
        residual = np.linalg.norm(hess @ jac + mixed) / scale
        if residual > _JACOBIAN_RESIDUAL_RTOL:
            raise SingularHessianError(
                f"implicit-Jacobian solve residual {residual:.3e}"
            )
    return jac


def adaptive_alpha(kappa, base):
    """Condition-scaled regularization: base * (1 + kappa)."""
    if kappa < 1.0:
        raise ValueError(f"condition number must be >= 1, got {kappa}")
    if base <= 0.0:
        raise ValueError("base regularization must be positive")
    return base * (1.0 + kappa)


def condition_number(jacobian, max_condition=1e8):
    """2-norm condition number; rank-deficient maps to the sentinel."""
    jac = np.atleast_2d(np.asarray(jacobian, dtype=float))
    if not np.any(jac):
        raise ZeroJacobianError("condition number of an all-zero Jacobian")
    singular = np.linalg.svd(jac, compute_uv=False)
    cutoff = singular[0] * max(jac.shape) * np.finfo(float).eps
    if singular[-1] <= cutoff:
        warnings.warn(
            "rank-deficient Jacobian; condition number set to the "
            f"max_condition sentinel {max_condition:g}"
        )
        return float(max_condition)
    kappa = float(singular[0] / singular[-1])
    if kappa >= max_condition:
        warnings.warn(f"Jacobian condition number {kappa:.3e} exceeds "
                      f"the diagnostic level {max_condition:g}")
    return kappa


def tikhonov_solve(jacobian, delta_r, alpha):
    """argmin ||J x - delta_r||^2 + alpha ||x||^2 via an augmented lstsq."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    jac = np.atleast_2d(np.asarray(jacobian, dtype=float))
    delta_r = np.asarray(delta_r, dtype=float)
    n = jac.shape[1]
    augmented = np.vstack([jac, np.sqrt(alpha) * np.eye(n)])
    rhs = np.concatenate([delta_r, np.zeros(n)])
    solution, *_ = np.linalg.lstsq(augmented, rhs, rcond=None)
    return solution


def transport_step(layout, currents, r_min_current, r_des_next, config,
                   constants=RB87, prev_metrics=None):
    """One solver step toward ``r_des_next``.

    Skips (returns the currents unchanged) when the requested forward
    x-progress is at or below the threshold, preventing backward steps.
    ``prev_metrics`` avoids re-characterizing an unchanged trap; when absent
    a skipped step characterizes in place.
    """
    currents = layout.check_currents(currents)
    r_min_current = np.asarray(r_min_current, dtype=float)
    r_des_next = np.asarray(r_des_next, dtype=float)
    delta_r = r_des_next - r_min_current

    if delta_r[0] <= config.forward_threshold:
        metrics = prev_metrics
        if metrics is None:
            metrics = characterize(layout, currents, r_min_current, constants)
        record = StepRecord(
            step_index=-1,
            currents=currents,
            metrics=metrics,
            jacobian_condition=float("nan"),
            alpha_used=float("nan"),
            requested_displacement=delta_r,
            achieved_displacement=np.zeros(3),
            skipped=True,
        )
        return currents, record

    hess = hessian(layout, currents, r_min_current, constants)
    mixed = mixed_second_derivative(layout, currents, r_min_current, constants)
    jac = position_jacobian(hess, mixed)

    scale = 1.0 / _SOLVE_LENGTH_SCALE
    update = np.zeros(layout.channel_count)
    if config.paper_literal_masking:
        kappa = condition_number(jac, config.max_condition)
        alpha = adaptive_alpha(kappa, config.base_regularization)
        delta_i = tikhonov_solve(jac * scale, delta_r * scale, alpha)
        update = np.where(config.mask, delta_i, 0.0)
    else:
        reduced = jac[:, config.mask]
        kappa = condition_number(reduced, config.max_condition)
        alpha = adaptive_alpha(kappa, config.base_regularization)
        update[config.mask] = tikhonov_solve(
            reduced * scale, delta_r * scale, alpha
        )

    next_currents = np.clip(
        currents + update, -config.clip_limits, config.clip_limits
    )
    clipped = next_currents != currents + update
    if np.any(clipped):
        log.warning("step clipped channels %s to their limits",
                    np.flatnonzero(clipped).tolist())
    next_currents.setflags(write=False)

    metrics = characterize(layout, next_currents, r_min_current, constants)
    record = StepRecord(
        step_index=-1,
        currents=next_currents,
        metrics=metrics,
        jacobian_condition=kappa,
        alpha_used=alpha,
        requested_displacement=delta_r,
        achieved_displacement=metrics.r_min - r_min_current,
        skipped=False,
    )
    return next_currents, record


def run_transport(layout, initial_currents, plan, config, constants=RB87):
    """Drive the trap along the plan; returns records for steps 0..N.

    Deterministic for identical inputs.  If a step loses the trap the loop
    aborts with TransportError carrying the records accumulated so far.
    """
    currents = layout.check_currents(initial_currents)
    metrics = characterize(layout, currents, plan.start, constants)
    first = StepRecord(
        step_index=0,
        currents=currents,
        metrics=metrics,
        jacobian_condition=float("nan"),
        alpha_used=float("nan"),
        requested_displacement=np.zeros(3),
        achieved_displacement=np.zeros(3),
        skipped=False,
    )
    records = [first]
    targets = desired_trajectory(plan)
    for t in range(plan.step_count):
        try:
            currents, record = transport_step(
                layout,
                currents,
                records[-1].metrics.r_min,
                targets[t + 1],
                config,
                constants,
                prev_metrics=records[-1].metrics,
            )
        except MicrotrapError as exc:
            raise TransportError(t + 1, tuple(records), exc) from exc
        records.append(
            StepRecord(
                step_index=t + 1,
                currents=record.currents,
                metrics=record.metrics,
                jacobian_condition=record.jacobian_condition,
                alpha_used=record.alpha_used,
                requested_displacement=record.requested_displacement,
                achieved_displacement=record.achieved_displacement,
                skipped=record.skipped,
            )
        )
    return TransportResult(records=tuple(records), plan=plan, config=config)
