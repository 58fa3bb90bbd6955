"""Command-line driver: run a transport, summarize it, emit data files.

Outputs are plain CSV (17-significant-digit scientific notation) plus JSON
summaries, deterministic byte-for-byte for identical inputs.  Lengths in
the output files are meters; the CLI flags use millimeters where noted.
"""

from dataclasses import dataclass, field
import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import geometry
from .errors import MicrotrapError, TransportError
from .schedule import SCHEDULE_KINDS, SMOOTHSTEP, TransportPlan, \
    desired_trajectory, minimum_step_count
from .solver import SolverConfig, run_transport
from .trap import RB87, characterize, adiabaticity, principal_axis_along

log = logging.getLogger(__name__)

_X_AXIS = np.array([1.0, 0.0, 0.0])
_FMT = "{:.17e}".format


@dataclass
class RunConfig:
    """Everything one transport run needs."""

    layout_path: str = None          # None -> built-in reference layout
    initial_currents: object = None  # None -> geometry.initial_currents()
    distance: float = 2.4e-3         # m, along x
    step_count: int = 2500
    kind: str = SMOOTHSTEP
    durations: tuple = (2.0, 3.0, 4.0, 5.0)
    base_regularization: float = 1e-2
    forward_threshold: float = 1e-9  # m
    optimize_channels: tuple = None  # None -> shifting group
    out_dir: str = "microtrap-out"
    seed: int = 0


@dataclass
class SummaryReport:
    """Relative drifts, per-step fluctuation ratios and adiabaticity."""

    du_min_rel: float
    dmu_rel: float
    domega_rel: np.ndarray
    drtf_rel: np.ndarray
    rmse_u_rel: float
    rmse_mu_rel: float
    rmse_omega_rel: np.ndarray
    rmse_rtf_rel: np.ndarray
    rms_step_displacement: np.ndarray
    epsilon_series: dict = field(repr=False)
    peak_epsilon: dict = None


def summarize(result, durations):
    """Compute the summary statistics of one transport result."""
    records = result.records
    if len(records) < 2:
        raise ValueError("summary needs a result with at least two records")
    u = np.array([r.metrics.u_min for r in records])
    mu = np.array([r.metrics.mu_chem for r in records])
    omega = np.array([r.metrics.omega for r in records])
    rtf = np.array([r.metrics.r_tf for r in records])
    pos = np.array([r.metrics.r_min for r in records])
    for name, first in (("U_min", u[0]), ("mu", mu[0])):
        if first == 0.0:
            raise ValueError(f"degenerate initial value: {name} is zero")
    if np.any(omega[0] == 0.0) or np.any(rtf[0] == 0.0):
        raise ValueError("degenerate initial value: omega or R_TF is zero")

    def rmse(series):
        return np.sqrt(np.mean(np.diff(series, axis=0) ** 2, axis=0))

    steps = np.diff(pos, axis=0)
    n = len(steps)
    # eps(t)*T is duration-independent; precompute it from per-step speed
    # |dx|*N and the x-aligned principal axis at the step start.
    base = np.empty(n)
    for t in range(n):
        metrics = records[t].metrics
        axis = principal_axis_along(metrics.eigenvectors, _X_AXIS)
        base[t] = adiabaticity(
            abs(steps[t, 0]) * n, metrics.omega[axis], metrics.r_tf[axis]
        )
    epsilon_series = {float(t_total): base / t_total for t_total in durations}
    peak = {t_total: float(np.max(series))
            for t_total, series in epsilon_series.items()}
    return SummaryReport(
        du_min_rel=float(u[-1] / u[0] - 1.0),
        dmu_rel=float(mu[-1] / mu[0] - 1.0),
        domega_rel=omega[-1] / omega[0] - 1.0,
        drtf_rel=rtf[-1] / rtf[0] - 1.0,
        rmse_u_rel=float(rmse(u) / u[0]),
        rmse_mu_rel=float(rmse(mu) / mu[0]),
        rmse_omega_rel=rmse(omega) / omega[0],
        rmse_rtf_rel=rmse(rtf) / rtf[0],
        rms_step_displacement=rmse(pos),
        epsilon_series=epsilon_series,
        peak_epsilon=peak,
    )


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        count = 0
        for row in rows:
            fh.write(",".join(row) + "\n")
            count += 1
    return count


def _duration_tag(t_total):
    return f"{t_total:g}"


def write_outputs(result, report, out_dir):
    """Write all data files; returns the manifest (also written as JSON)."""
    os.makedirs(out_dir, exist_ok=True)
    records = result.records
    n_channels = len(records[0].currents)
    manifest = []

    def emit(name, header, rows):
        rows_written = _write_csv(os.path.join(out_dir, name), header, rows)
        manifest.append({"path": name, "rows": rows_written})

    emit(
        "currents.csv",
        "step," + ",".join(f"I_{k}" for k in range(n_channels)),
        ((str(r.step_index),) + tuple(_FMT(i) for i in r.currents)
         for r in records),
    )
    desired = desired_trajectory(result.plan)
    emit(
        "trajectory.csv",
        "step,x_des,y_des,z_des,x,y,z",
        ((str(r.step_index),)
         + tuple(_FMT(c) for c in desired[i])
         + tuple(_FMT(c) for c in r.metrics.r_min)
         for i, r in enumerate(records)),
    )
    emit(
        "metrics.csv",
        "step,U_min,mu,omega_1,omega_2,omega_3,rtf_1,rtf_2,rtf_3,"
        "kappa,alpha,skipped",
        ((str(r.step_index), _FMT(r.metrics.u_min), _FMT(r.metrics.mu_chem))
         + tuple(_FMT(w) for w in r.metrics.omega)
         + tuple(_FMT(w) for w in r.metrics.r_tf)
         + (_FMT(r.jacobian_condition), _FMT(r.alpha_used),
            str(int(r.skipped)))
         for r in records),
    )
    for t_total, series in sorted(report.epsilon_series.items()):
        emit(
            f"adiabaticity_T{_duration_tag(t_total)}.csv",
            "step,epsilon",
            ((str(i), _FMT(e)) for i, e in enumerate(series)),
        )

    summary = {
        "du_min_rel": report.du_min_rel,
        "dmu_rel": report.dmu_rel,
        "domega_rel": list(report.domega_rel),
        "drtf_rel": list(report.drtf_rel),
        "rmse_u_rel": report.rmse_u_rel,
        "rmse_mu_rel": report.rmse_mu_rel,
        "rmse_omega_rel": list(report.rmse_omega_rel),
        "rmse_rtf_rel": list(report.rmse_rtf_rel),
        "rms_step_displacement": list(report.rms_step_displacement),
        "peak_epsilon": {
            _duration_tag(t): p for t, p in sorted(report.peak_epsilon.items())
        },
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    manifest.append({"path": "summary.json", "rows": 1})

    manifest_doc = {"files": manifest}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest_doc, fh, indent=2)
        fh.write("\n")
    return manifest_doc


def run(config):
    """Execute one transport run; returns a process exit status."""
    started = time.perf_counter()
    try:
        if config.layout_path is None:
            layout = geometry.reference_layout()
        else:
            layout = geometry.load_layout(config.layout_path)
        if config.initial_currents is not None:
            currents = layout.check_currents(config.initial_currents)
        elif layout.channel_count == geometry.reference_layout().channel_count:
            currents = geometry.initial_currents()
        else:
            print("error: no initial currents given and the layout does not "
                  "match the built-in channel count", file=sys.stderr)
            return 1

        initial = characterize(layout, currents, (0.0, 0.0, 0.3e-3))
        plan = TransportPlan(
            start=initial.r_min,
            displacement=(config.distance, 0.0, 0.0),
            step_count=config.step_count,
            kind=config.kind,
            durations=config.durations,
        )
        axis = principal_axis_along(initial.eigenvectors, _X_AXIS)
        needed = minimum_step_count(config.distance, initial.r_tf[axis])
        if config.step_count < needed:
            log.warning(
                "step count %d is below the per-step resolution criterion %d",
                config.step_count, needed,
            )
        solver_config = SolverConfig.from_layout(
            layout,
            optimize_channels=config.optimize_channels,
            base_regularization=config.base_regularization,
            forward_threshold=config.forward_threshold,
        )
        result = run_transport(layout, currents, plan, solver_config)
        report = summarize(result, config.durations)
        write_outputs(result, report, config.out_dir)
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MicrotrapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - started
    print(f"transport of {config.distance * 1e3:g} mm in "
          f"{config.step_count} steps finished; wall time {wall:.1f} s; "
          f"outputs in {config.out_dir}")
    return 0


def _parse_channels(text):
    channels = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            channels.extend(range(int(lo), int(hi) + 1))
        elif part:
            channels.append(int(part))
    return tuple(channels)


def _parse_durations(text):
    values = tuple(float(p) for p in text.split(",") if p.strip())
    if not values:
        raise argparse.ArgumentTypeError("durations must not be empty")
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="microtrap",
        description="Simulate magnetic-microtrap transport above an atom "
                    "chip and solve for the wire-current schedule.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--layout", metavar="PATH",
                        help="layout JSON file to load")
    source.add_argument("--builtin-reference", action="store_true",
                        help="use the built-in reference layout")
    parser.add_argument("--distance", type=float, default=2.4,
                        help="transport distance along x, mm (default 2.4)")
    parser.add_argument("--steps", type=int, default=2500,
                        help="number of solver steps (default 2500)")
    parser.add_argument("--schedule", choices=SCHEDULE_KINDS,
                        default=SMOOTHSTEP, help="trajectory schedule kind")
    parser.add_argument("--durations", type=_parse_durations,
                        default=(2.0, 3.0, 4.0, 5.0), metavar="T1,T2,...",
                        help="transport durations for the adiabaticity "
                             "report, seconds (default 2,3,4,5)")
    parser.add_argument("--lambda", dest="base_regularization", type=float,
                        default=1e-2, help="base regularization (default 1e-2)")
    parser.add_argument("--threshold-mm", type=float, default=1e-6,
                        help="forward-step threshold, mm (default 1e-6)")
    parser.add_argument("--optimize-channels", type=_parse_channels,
                        default=(0, 1, 2, 3, 4, 5), metavar="SPEC",
                        help="channels to optimize, e.g. '0-5' or '0,2,4'")
    parser.add_argument("--out", default="microtrap-out",
                        help="output directory (default microtrap-out)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed recorded with the run (no randomized "
                             "stages in the current pipeline)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    config = RunConfig(
        layout_path=args.layout,
        distance=args.distance * 1e-3,
        step_count=args.steps,
        kind=args.schedule,
        durations=args.durations,
        base_regularization=args.base_regularization,
        forward_threshold=args.threshold_mm * 1e-3,
        optimize_channels=args.optimize_channels,
        out_dir=args.out,
        seed=args.seed,
    )
    sys.exit(run(config))


if __name__ == "__main__":
    main()
