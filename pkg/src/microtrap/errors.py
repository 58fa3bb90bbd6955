"""Exception types shared across the package."""


class MicrotrapError(Exception):
    """Base class for all package errors."""


class LayoutError(MicrotrapError):
    """Layout file failed to parse or violated a layout invariant."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class SingularEvaluationError(MicrotrapError):
    """Field evaluation requested inside or within 1 nm of a conductor."""

    def __init__(self, prism_index, point):
        self.prism_index = int(prism_index)
        self.point = point
        super().__init__(
            f"evaluation point {point} is inside or within 1e-9 m of the "
            f"surface of wire prism {prism_index}"
        )


class ConvergenceError(MicrotrapError):
    """Minimum search did not converge within the iteration budget."""


class TrapLossError(MicrotrapError):
    """Minimizer escaped the simulation bounding box: no local trap."""


class SaddlePointError(MicrotrapError):
    """Stationary point has a non-positive Hessian eigenvalue."""


class ZeroFieldError(MicrotrapError):
    """|B| vanished at the trap minimum (spin-flip region, unphysical trap)."""


class SingularHessianError(MicrotrapError):
    """Hessian too close to singular for the implicit-Jacobian solve."""


class ZeroJacobianError(MicrotrapError):
    """Condition number requested for an all-zero Jacobian."""


class TransportError(MicrotrapError):
    """Transport loop aborted; carries the records accumulated so far."""

    def __init__(self, step_index, records, cause):
        self.step_index = int(step_index)
        self.records = records
        self.cause = cause
        super().__init__(f"transport failed at step {step_index}: {cause}")
