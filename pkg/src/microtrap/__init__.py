"""Magnetic microtrap simulation and inverse transport-current optimization.

Closed-form fields of rectangular-prism chip wires, trap characterization
(minimum, Hessian eigensystem, frequencies, Thomas-Fermi radii, chemical
potential, adiabaticity), trajectory scheduling, and the per-step Tikhonov
inverse solver that computes wire-current schedules moving the trap along a
prescribed path.
"""

from .errors import (
    ConvergenceError,
    LayoutError,
    MicrotrapError,
    SaddlePointError,
    SingularEvaluationError,
    SingularHessianError,
    TransportError,
    TrapLossError,
    ZeroFieldError,
    ZeroJacobianError,
)
from .geometry import (
    ChipLayout,
    WirePrism,
    initial_currents,
    load_layout,
    reference_layout,
    save_layout,
    validate_layout,
)
from .fields import (
    basis_fields,
    basis_field_gradients,
    field_spatial_gradient,
    prism_field_per_ampere,
    total_field,
)
from .trap import (
    PhysicalConstants,
    RB87,
    TrapMetrics,
    adiabaticity,
    characterize,
    chemical_potential,
    find_minimum,
    hessian,
    metrics_from_hessian,
    potential,
    potential_gradient,
    principal_axis_along,
)
from .schedule import (
    TransportPlan,
    desired_trajectory,
    minimum_step_count,
    schedule_value,
    step_velocities,
)
from .solver import (
    SolverConfig,
    StepRecord,
    TransportResult,
    adaptive_alpha,
    condition_number,
    mixed_second_derivative,
    position_jacobian,
    run_transport,
    tikhonov_solve,
    transport_step,
)
from .cli import RunConfig, SummaryReport, run, summarize, write_outputs

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
