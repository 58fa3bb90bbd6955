import math

import numpy as np
import pytest

from microtrap.schedule import (
    COSINE,
    LINEAR,
    SCHEDULE_KINDS,
    SMOOTHSTEP,
    TransportPlan,
    desired_trajectory,
    minimum_step_count,
    schedule_value,
    step_velocities,
)


def test_schedule_values():
    assert schedule_value(SMOOTHSTEP, 0.5) == 0.5
    assert schedule_value(SMOOTHSTEP, 0.25) == 0.103515625
    assert schedule_value(COSINE, 0.25) == pytest.approx(
        (1 - math.cos(math.pi / 4)) / 2, rel=1e-15
    )
    assert schedule_value(LINEAR, 0.3) == 0.3
    for kind in SCHEDULE_KINDS:
        assert schedule_value(kind, 0.0) == 0.0
        assert schedule_value(kind, 1.0) == 1.0


def test_schedule_domain_errors():
    with pytest.raises(ValueError):
        schedule_value(SMOOTHSTEP, -0.01)
    with pytest.raises(ValueError):
        schedule_value(SMOOTHSTEP, 1.01)
    with pytest.raises(ValueError, match="kind"):
        schedule_value("quintic", 0.5)


@pytest.mark.parametrize("kind", SCHEDULE_KINDS)
def test_schedule_monotone(kind):
    grid = np.linspace(0.0, 1.0, 10_001)
    values = schedule_value(kind, grid)
    assert np.all(np.diff(values) >= 0.0)


def test_smoothstep_c2_endpoints():
    h = 1e-4
    for s0 in (0.0, 1.0):
        grid = s0 + np.array([0.0, h, 2 * h]) * (1 if s0 == 0.0 else -1)
        v = schedule_value(SMOOTHSTEP, grid)
        first = (v[1] - v[0]) / h
        second = (v[2] - 2 * v[1] + v[0]) / h**2
        assert abs(first) < 10 * h      # derivative ~ O(h^2) near the ends
        assert abs(second) < 100 * h


def make_plan(**overrides):
    fields = dict(
        start=(0.0, 0.0, 0.33e-3),
        displacement=(2.4e-3, 0.0, 0.0),
        step_count=2500,
        kind=SMOOTHSTEP,
        durations=(2.0,),
    )
    fields.update(overrides)
    return TransportPlan(**fields)


def test_plan_validation():
    with pytest.raises(ValueError):
        make_plan(step_count=0)
    with pytest.raises(ValueError):
        make_plan(durations=(0.0,))
    with pytest.raises(ValueError):
        make_plan(kind="bezier")


def test_trajectory_midpoint_symmetry():
    plan = make_plan(step_count=2)
    traj = desired_trajectory(plan)
    assert traj.shape == (3, 3)
    assert np.array_equal(traj[0], plan.start)
    assert np.array_equal(traj[1], plan.start + 0.5 * plan.displacement)
    assert np.array_equal(traj[2], plan.start + plan.displacement)


def test_trajectory_endpoints_exact():
    plan = make_plan()
    traj = desired_trajectory(plan)
    assert traj.shape == (2501, 3)
    assert np.array_equal(traj[0], plan.start)
    assert np.array_equal(traj[-1], plan.start + plan.displacement)
    assert traj[-1][0] == plan.start[0] + 2.4e-3


def test_linear_trajectory_uniform():
    plan = make_plan(kind=LINEAR, step_count=100)
    traj = desired_trajectory(plan)
    steps = np.diff(traj[:, 0])
    assert np.allclose(steps, 2.4e-3 / 100, rtol=1e-12)


def test_telescoping_sum():
    plan = make_plan(start=(0.0, 0.0, 0.0), step_count=997)
    traj = desired_trajectory(plan)
    total = 0.0
    for dx in np.diff(traj[:, 0]):
        total += dx
    assert total == plan.displacement[0]


def test_minimum_step_count_examples():
    assert minimum_step_count(2.4e-3, 9.69e-6, 1.0) == 248
    assert minimum_step_count(2.4e-3, 9.69e-6, 10.0) == 2477
    assert minimum_step_count(1e-5, 1e-5, 1.0) == 1
    with pytest.raises(ValueError):
        minimum_step_count(-1.0, 1e-5, 1.0)


def test_step_velocities_linear():
    plan = make_plan(kind=LINEAR, step_count=50)
    traj = desired_trajectory(plan)
    v = step_velocities(traj, 2.0)
    assert v.shape == (50, 3)
    assert np.allclose(v[:, 0], 2.4e-3 / 2.0, rtol=1e-12)
    assert np.all(v[:, 1:] == 0.0)


def test_step_velocities_smoothstep_peak():
    plan = make_plan(step_count=5000)
    traj = desired_trajectory(plan)
    v = step_velocities(traj, 2.0)
    peak = np.max(v[:, 0])
    assert peak == pytest.approx((15 / 8) * 2.4e-3 / 2.0, rel=1e-5)


def test_step_velocities_telescoping():
    plan = make_plan(start=(0.0, 0.0, 0.0), step_count=313)
    traj = desired_trajectory(plan)
    v = step_velocities(traj, 4.0)
    dt = 4.0 / 313
    total = np.zeros(3)
    for row in v:
        total += row * dt
    assert np.allclose(total, plan.displacement, rtol=1e-12, atol=1e-20)


def test_step_velocities_validation():
    with pytest.raises(ValueError):
        step_velocities(np.zeros((1, 3)), 1.0)
    with pytest.raises(ValueError):
        step_velocities(np.zeros((5, 3)), 0.0)
