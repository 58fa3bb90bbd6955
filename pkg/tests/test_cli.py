import json
import math

import numpy as np
import pytest

from microtrap.cli import (
    RunConfig,
    build_parser,
    main,
    run,
    summarize,
    write_outputs,
)
from microtrap.geometry import save_layout
from microtrap.schedule import TransportPlan
from microtrap.solver import SolverConfig, StepRecord, TransportResult
from microtrap.trap import characterize, find_minimum

SMALL = dict(distance=0.06e-3, step_count=60, durations=(2.0, 4.0))


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    config = RunConfig(out_dir=str(out), **SMALL)
    assert run(config) == 0
    return out


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh]
    return header, rows


def test_smoke_outputs_present(small_run):
    names = sorted(p.name for p in small_run.iterdir())
    assert names == [
        "adiabaticity_T2.csv",
        "adiabaticity_T4.csv",
        "currents.csv",
        "manifest.json",
        "metrics.csv",
        "summary.json",
        "trajectory.csv",
    ]


def test_manifest_row_counts(small_run):
    manifest = json.loads((small_run / "manifest.json").read_text())
    rows = {entry["path"]: entry["rows"] for entry in manifest["files"]}
    n = SMALL["step_count"]
    assert rows["currents.csv"] == n + 1
    assert rows["trajectory.csv"] == n + 1
    assert rows["metrics.csv"] == n + 1
    assert rows["adiabaticity_T2.csv"] == n
    assert rows["adiabaticity_T4.csv"] == n


def test_currents_header(small_run):
    header, rows = read_csv(small_run / "currents.csv")
    assert header == ["step"] + [f"I_{k}" for k in range(15)]
    assert len(rows) == SMALL["step_count"] + 1


def test_metrics_header(small_run):
    header, _ = read_csv(small_run / "metrics.csv")
    assert header == [
        "step", "U_min", "mu", "omega_1", "omega_2", "omega_3",
        "rtf_1", "rtf_2", "rtf_3", "kappa", "alpha", "skipped",
    ]


def test_summary_recomputable_from_metrics(small_run):
    _, rows = read_csv(small_run / "metrics.csv")
    data = np.array([[float(v) for v in row[1:9]] for row in rows])
    u, mu = data[:, 0], data[:, 1]
    omega = data[:, 2:5]
    rtf = data[:, 5:8]
    summary = json.loads((small_run / "summary.json").read_text())
    assert summary["du_min_rel"] == pytest.approx(u[-1] / u[0] - 1, rel=1e-12)
    assert summary["dmu_rel"] == pytest.approx(mu[-1] / mu[0] - 1, rel=1e-12)
    assert np.allclose(
        summary["domega_rel"], omega[-1] / omega[0] - 1, rtol=1e-12
    )
    rmse_u = np.sqrt(np.mean(np.diff(u) ** 2)) / u[0]
    assert summary["rmse_u_rel"] == pytest.approx(rmse_u, rel=1e-12)
    rmse_rtf = np.sqrt(np.mean(np.diff(rtf, axis=0) ** 2, axis=0)) / rtf[0]
    assert np.allclose(summary["rmse_rtf_rel"], rmse_rtf, rtol=1e-12)


def test_epsilon_duration_scaling(small_run):
    _, rows2 = read_csv(small_run / "adiabaticity_T2.csv")
    _, rows4 = read_csv(small_run / "adiabaticity_T4.csv")
    e2 = np.array([float(r[1]) for r in rows2])
    e4 = np.array([float(r[1]) for r in rows4])
    nonzero = e4 > 0
    assert np.all(e2[nonzero] / e4[nonzero] == 2.0)


def test_replay_reproduces_positions(small_run, layout):
    _, current_rows = read_csv(small_run / "currents.csv")
    _, traj_rows = read_csv(small_run / "trajectory.csv")
    recorded = np.array([[float(v) for v in row[4:7]] for row in traj_rows])
    guess = recorded[0]
    for i in range(0, len(current_rows), 7):
        currents = np.array([float(v) for v in current_rows[i][1:]])
        found = find_minimum(layout, currents, guess)
        assert np.linalg.norm(found - recorded[i]) < 1e-8
        guess = found


def test_byte_identical_reruns(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        assert run(RunConfig(out_dir=str(out), distance=0.02e-3,
                             step_count=20, durations=(2.0,))) == 0
    for path_a in sorted(out_a.iterdir()):
        path_b = out_b / path_a.name
        assert path_a.read_bytes() == path_b.read_bytes()


def test_run_with_layout_file(tmp_path, layout):
    path = tmp_path / "ref.json"
    save_layout(layout, path)
    config = RunConfig(layout_path=str(path), out_dir=str(tmp_path / "out"),
                       distance=0.01e-3, step_count=10, durations=(2.0,))
    assert run(config) == 0


def test_run_rejects_bad_layout_path(tmp_path, capsys):
    config = RunConfig(layout_path=str(tmp_path / "missing.json"),
                       out_dir=str(tmp_path / "out"))
    assert run(config) == 1
    assert "error" in capsys.readouterr().err


def test_invalid_schedule_kind_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--builtin-reference", "--schedule", "quintic"])
    assert exc.value.code == 2
    assert "--schedule" in capsys.readouterr().err


def test_parser_defaults():
    args = build_parser().parse_args(["--builtin-reference"])
    assert args.distance == 2.4
    assert args.steps == 2500
    assert args.schedule == "smoothstep"
    assert args.durations == (2.0, 3.0, 4.0, 5.0)
    assert args.base_regularization == 1e-2
    assert args.threshold_mm == 1e-6
    assert args.optimize_channels == (0, 1, 2, 3, 4, 5)


def test_parser_channel_spec():
    args = build_parser().parse_args(
        ["--builtin-reference", "--optimize-channels", "0-2,5"]
    )
    assert args.optimize_channels == (0, 1, 2, 5)


def constant_result(metrics, n_steps, config):
    plan = TransportPlan(
        start=metrics.r_min,
        displacement=(0.0, 0.0, 0.0),
        step_count=n_steps,
        kind="smoothstep",
        durations=(2.0, 4.0),
    )
    records = [
        StepRecord(
            step_index=i,
            currents=np.zeros(15),
            metrics=metrics,
            jacobian_condition=float("nan"),
            alpha_used=float("nan"),
            requested_displacement=np.zeros(3),
            achieved_displacement=np.zeros(3),
            skipped=i > 0,
        )
        for i in range(n_steps + 1)
    ]
    return TransportResult(records=tuple(records), plan=plan, config=config)


def test_summarize_constant_result(layout, initial_metrics):
    config = SolverConfig.from_layout(layout)
    result = constant_result(initial_metrics, 10, config)
    report = summarize(result, (2.0, 4.0))
    assert report.du_min_rel == 0.0
    assert report.dmu_rel == 0.0
    assert np.all(report.domega_rel == 0.0)
    assert np.all(report.drtf_rel == 0.0)
    assert report.rmse_u_rel == 0.0
    assert np.all(report.rms_step_displacement == 0.0)
    assert report.peak_epsilon[2.0] == 0.0


def test_summarize_uniform_steps_rms(layout, initial_metrics):
    config = SolverConfig.from_layout(layout)
    n, dx = 10, 2.0e-6
    records = []
    for i in range(n + 1):
        shifted = type(initial_metrics)(
            **{
                **{f.name: getattr(initial_metrics, f.name)
                   for f in initial_metrics.__dataclass_fields__.values()},
                "r_min": initial_metrics.r_min + np.array([i * dx, 0.0, 0.0]),
            }
        )
        records.append(StepRecord(i, np.zeros(15), shifted, float("nan"),
                                  float("nan"), np.zeros(3), np.zeros(3),
                                  False))
    plan = TransportPlan(start=initial_metrics.r_min,
                         displacement=(n * dx, 0.0, 0.0), step_count=n)
    result = TransportResult(records=tuple(records), plan=plan, config=config)
    report = summarize(result, (2.0,))
    assert report.rms_step_displacement[0] == pytest.approx(dx, rel=1e-14)
    # eps * T invariance, exact for a duration ratio of 2
    report = summarize(result, (2.0, 4.0))
    assert np.all(
        report.epsilon_series[2.0] == 2.0 * report.epsilon_series[4.0]
    )


def test_summarize_needs_two_records(layout, initial_metrics):
    config = SolverConfig.from_layout(layout)
    result = constant_result(initial_metrics, 10, config)
    short = TransportResult(records=result.records[:1], plan=result.plan,
                            config=config)
    with pytest.raises(ValueError):
        summarize(short, (2.0,))


def test_write_outputs_deterministic(tmp_path, layout, initial_metrics):
    config = SolverConfig.from_layout(layout)
    result = constant_result(initial_metrics, 5, config)
    report = summarize(result, (2.0, 4.0))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    manifest_a = write_outputs(result, report, out_a)
    manifest_b = write_outputs(result, report, out_b)
    assert manifest_a == manifest_b
    for path_a in sorted(out_a.iterdir()):
        assert path_a.read_bytes() == (out_b / path_a.name).read_bytes()
