import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from gaitrep import (
    DEFAULT_WEIGHTS,
    DomainMismatch,
    GaitProfile,
    InfeasibleBounds,
    MaxIterationsWarning,
    NodeSequence,
    OutOfDomain,
    PlanBounds,
    ValidationError,
    VelocityPlan,
    as_weight_matrix,
    commands_to_plan,
    default_plans,
    eval_velocity,
    evaluate_plans,
    integrate_plan,
    optimize_plan,
    plan_cost,
    plan_to_commands,
    synthetic_walk,
)


def simple_plan(w0=0.0, w=(1.0,), alpha=(2.0,), times=(0.0, 1.0), bounds=None):
    return VelocityPlan(
        nodes=NodeSequence(np.asarray(times, dtype=float)),
        w0=w0,
        w=np.asarray(w, dtype=float),
        alpha=np.asarray(alpha, dtype=float),
        bounds=bounds or PlanBounds(),
    )


def planted_pair(nodes, bounds):
    hip = VelocityPlan(
        nodes=nodes, w0=0.5, w=np.array([1.2, -0.8, 0.3]),
        alpha=np.array([8.0, -10.0, 6.0]), bounds=bounds,
    )
    knee = VelocityPlan(
        nodes=nodes, w0=-0.2, w=np.array([0.9, 1.4, -0.5]),
        alpha=np.array([7.0, 5.0, -9.0]), bounds=bounds,
    )
    return hip, knee


def reference_from_plans(plans, theta0, dt=5e-3):
    hip, _ = plans
    grid = np.arange(hip.nodes.times[0], hip.nodes.times[-1] + 1e-9, dt)
    theta, omega, accel, _ = evaluate_plans(plans, theta0, grid)
    return GaitProfile(
        t=grid, theta=theta, theta_dot=omega, theta_ddot=accel, source="planted"
    )


def test_bounds_validation():
    with pytest.raises(InfeasibleBounds):
        PlanBounds(w_min=1.0, w_max=-1.0)
    with pytest.raises(InfeasibleBounds):
        PlanBounds(a_min=5.0, a_max=-5.0)
    PlanBounds(w_min=2.0, w_max=2.0)  # collapsed box is allowed


def test_plan_validation():
    with pytest.raises(ValidationError):
        simple_plan(w=(10.0,))  # outside default |w| <= 6
    with pytest.raises(ValidationError):
        simple_plan(alpha=(100.0,))
    with pytest.raises(ValidationError):
        simple_plan(w=(1.0, 2.0))  # wrong parameter count


def test_eval_constant_segment():
    plan = simple_plan(w0=0.7, w=(0.7,), alpha=(3.0,))
    tq = np.linspace(0.0, 1.0, 11)
    assert np.array_equal(eval_velocity(plan, tq), np.full(11, 0.7))


def test_eval_ramp_arithmetic():
    # Ramp 0 -> 1 at accel 2 ends at t1 = 0.5.
    plan = simple_plan(w0=0.0, w=(1.0,), alpha=(2.0,))
    assert eval_velocity(plan, 0.25) == pytest.approx(0.5, abs=1e-15)
    assert eval_velocity(plan, 0.75) == pytest.approx(1.0, abs=1e-15)
    assert eval_velocity(plan, 0.5) == pytest.approx(1.0, abs=1e-15)


def test_eval_out_of_domain():
    plan = simple_plan()
    with pytest.raises(OutOfDomain):
        eval_velocity(plan, -0.1)
    with pytest.raises(OutOfDomain):
        eval_velocity(plan, 1.1)


def test_velocity_continuity_at_ramp_ends(rng):
    nodes = NodeSequence(np.array([0.0, 0.3, 0.7, 1.0]))
    bounds = PlanBounds()
    for _ in range(20):
        w = rng.uniform(-2, 2, 3)
        w0 = rng.uniform(-2, 2)
        prev = np.concatenate([[w0], w[:-1]])
        # Feasible accelerations: large enough to finish each ramp in time.
        seg = np.diff(nodes.times)
        alpha = np.sign(w - prev) * (np.abs(w - prev) / seg + rng.uniform(0.5, 5, 3))
        alpha[w == prev] = 1.0
        plan = VelocityPlan(nodes=nodes, w0=w0, w=w, alpha=alpha, bounds=bounds)
        t1 = nodes.times[:-1] + (w - prev) / alpha
        for k in range(3):
            lo = eval_velocity(plan, max(t1[k] - 1e-9, 0.0))
            hi = eval_velocity(plan, min(t1[k] + 1e-9, 1.0))
            assert abs(hi - lo) < 1e-6
            assert eval_velocity(plan, t1[k]) == pytest.approx(w[k], abs=1e-12)


def test_ramp_identity():
    # alpha_k * (t1_k - t0_k) = w_k - w_{k-1} for the implied ramp end.
    plan = simple_plan(w0=0.2, w=(1.4,), alpha=(3.0,))
    t1 = 0.0 + (1.4 - 0.2) / 3.0
    assert 3.0 * (t1 - 0.0) == pytest.approx(1.4 - 0.2, abs=1e-12)
    assert eval_velocity(plan, t1) == pytest.approx(1.4, abs=1e-12)


def test_integrate_trapezoid_area():
    # w: 0 -> 1 over [0, 0.5], then constant: area = 0.25 + 0.5.
    plan = simple_plan(w0=0.0, w=(1.0,), alpha=(2.0,))
    traj = integrate_plan(plan, theta0=0.0, dt=0.25)
    assert traj.t[-1] == pytest.approx(1.0)
    assert traj.theta[-1] == pytest.approx(0.75, abs=1e-12)
    assert traj.n_repaired == 0


def test_integrate_zero_plan():
    plan = simple_plan(w0=0.0, w=(0.0,), alpha=(0.0,))
    traj = integrate_plan(plan, theta0=0.3, dt=0.1)
    assert np.array_equal(traj.theta, np.full_like(traj.t, 0.3))
    assert np.array_equal(traj.omega, np.zeros_like(traj.t))


def test_integrate_matches_quadrature():
    # Ramp ends fall on the quadrature grid, so trapezoid sums are exact.
    nodes = NodeSequence(np.array([0.0, 0.5, 1.0]))
    plan = VelocityPlan(
        nodes=nodes, w0=0.0, w=np.array([1.0, -0.5]), alpha=np.array([4.0, -5.0]),
        bounds=PlanBounds(),
    )
    traj = integrate_plan(plan, theta0=0.1, dt=1e-3)
    quad = 0.1 + cumulative_trapezoid(traj.omega, traj.t, initial=0.0)
    assert np.max(np.abs(traj.theta - quad)) < 1e-10


def test_repair_semantics():
    # Too-small and wrong-sign accelerations still reach w_k by segment end.
    plan = simple_plan(w0=0.0, w=(2.0,), alpha=(0.5,))  # needs >= 2.0
    traj = integrate_plan(plan, theta0=0.0, dt=0.01)
    assert traj.n_repaired == 1
    assert traj.omega[-1] == pytest.approx(2.0, abs=1e-12)
    plan2 = simple_plan(w0=0.0, w=(2.0,), alpha=(-30.0,))
    traj2 = integrate_plan(plan2, theta0=0.0, dt=0.01)
    assert traj2.n_repaired == 1
    assert traj2.omega[-1] == pytest.approx(2.0, abs=1e-12)


def test_accel_is_zero_on_plateaus():
    plan = simple_plan(w0=0.0, w=(1.0,), alpha=(2.0,))
    traj = integrate_plan(plan, theta0=0.0, dt=0.05)
    on_plateau = traj.t > 0.5
    assert np.array_equal(traj.accel[on_plateau], np.zeros(np.sum(on_plateau)))
    assert np.array_equal(
        traj.accel[traj.t < 0.5], np.full(np.sum(traj.t < 0.5), 2.0)
    )


def test_plan_cost_zero_for_planted_reference(leg):
    nodes = NodeSequence(np.array([0.0, 0.4, 0.8, 1.2]))
    plans = planted_pair(nodes, PlanBounds())
    ref = reference_from_plans(plans, np.array([0.05, -0.1]))
    assert plan_cost(leg, plans, ref, DEFAULT_WEIGHTS) == 0.0


def test_plan_cost_weight_scaling(leg):
    nodes = NodeSequence(np.array([0.0, 0.4, 0.8, 1.2]))
    plans = planted_pair(nodes, PlanBounds())
    ref = reference_from_plans(plans, np.array([0.05, -0.1]))
    other = (
        VelocityPlan(nodes=nodes, w0=0.5, w=np.array([1.0, -0.5, 0.2]),
                     alpha=np.array([8.0, -10.0, 6.0]), bounds=PlanBounds()),
        plans[1],
    )
    j10 = plan_cost(leg, other, ref, np.diag([10.0, 10.0]))
    j20 = plan_cost(leg, other, ref, np.diag([20.0, 20.0]))
    assert j20 == pytest.approx(np.sqrt(2.0) * j10, rel=1e-12)
    assert plan_cost(leg, other, ref, np.zeros((2, 2))) == 0.0


def test_plan_cost_domain_mismatch(leg):
    nodes = NodeSequence(np.array([0.0, 0.4, 0.8, 1.2]))
    plans = planted_pair(nodes, PlanBounds())
    short_nodes = NodeSequence(np.array([0.0, 0.5, 0.75, 1.0]))
    short = planted_pair(short_nodes, PlanBounds())
    ref = reference_from_plans(plans, np.array([0.0, 0.0]))
    with pytest.raises(DomainMismatch):
        plan_cost(leg, short, ref, DEFAULT_WEIGHTS)


def test_weight_matrix_coercion():
    assert np.array_equal(as_weight_matrix(5.0), np.diag([5.0, 5.0]))
    assert np.array_equal(as_weight_matrix([1.0, 2.0]), np.diag([1.0, 2.0]))
    with pytest.raises(ValidationError):
        as_weight_matrix([[1.0, 0.5], [0.5, 1.0]])
    with pytest.raises(ValidationError):
        as_weight_matrix([-1.0, 1.0])


def test_optimizer_recovers_planted_plan(leg, rng):
    nodes = NodeSequence(np.array([0.0, 0.6, 1.2]))
    bounds = PlanBounds()
    hip = VelocityPlan(nodes=nodes, w0=0.5, w=np.array([1.2, -0.8]),
                       alpha=np.array([8.0, -10.0]), bounds=bounds)
    knee = VelocityPlan(nodes=nodes, w0=-0.2, w=np.array([0.9, -0.4]),
                        alpha=np.array([7.0, -5.0]), bounds=bounds)
    ref = reference_from_plans((hip, knee), np.array([0.05, -0.1]))

    def perturb(plan):
        w = bounds.clip_w(plan.w * (1 + 0.1 * rng.standard_normal(plan.w.size)))
        a = bounds.clip_a(plan.alpha * (1 + 0.1 * rng.standard_normal(plan.alpha.size)))
        return VelocityPlan(nodes=nodes, w0=plan.w0, w=w, alpha=a, bounds=bounds)

    init = (perturb(hip), perturb(knee))
    opt = optimize_plan(leg, nodes, ref, bounds, DEFAULT_WEIGHTS, init, n_starts=3, seed=0)
    assert opt.cost < 1e-3 * opt.cost_init
    assert opt.cost <= opt.cost_init
    assert np.all(np.diff(opt.trace) <= 0.0)
    for plan in opt.plans:
        assert np.all(plan.w >= bounds.w_min) and np.all(plan.w <= bounds.w_max)
        assert np.all(plan.alpha >= bounds.a_min) and np.all(plan.alpha <= bounds.a_max)


def test_optimizer_collapsed_bounds(leg):
    nodes = NodeSequence(np.array([0.0, 0.6, 1.2]))
    bounds = PlanBounds(w_min=0.5, w_max=0.5, a_min=2.0, a_max=2.0)
    point = (
        VelocityPlan(nodes=nodes, w0=0.0, w=np.full(2, 0.5), alpha=np.full(2, 2.0), bounds=bounds),
        VelocityPlan(nodes=nodes, w0=0.0, w=np.full(2, 0.5), alpha=np.full(2, 2.0), bounds=bounds),
    )
    ref = reference_from_plans(point, np.array([0.0, 0.0]))
    opt = optimize_plan(leg, nodes, ref, bounds, DEFAULT_WEIGHTS, point, seed=1)
    assert opt.cost == plan_cost(leg, point, ref, DEFAULT_WEIGHTS)
    assert opt.converged
    assert np.array_equal(opt.plans[0].w, point[0].w)


def test_optimizer_determinism(leg, rng):
    nodes = NodeSequence(np.array([0.0, 0.6, 1.2]))
    bounds = PlanBounds()
    plans = (
        VelocityPlan(nodes=nodes, w0=0.0, w=np.array([1.0, -1.0]),
                     alpha=np.array([5.0, -5.0]), bounds=bounds),
        VelocityPlan(nodes=nodes, w0=0.0, w=np.array([0.5, 0.8]),
                     alpha=np.array([4.0, 3.0]), bounds=bounds),
    )
    ref = reference_from_plans(plans, np.array([0.0, 0.0]))
    init = default_plans(ref, nodes, bounds)
    # The tiny budget both checks determinism and exercises the
    # best-so-far-with-warning contract on budget exhaustion.
    with pytest.warns(MaxIterationsWarning):
        a = optimize_plan(leg, nodes, ref, bounds, DEFAULT_WEIGHTS, init, seed=7, max_evals=500)
    with pytest.warns(MaxIterationsWarning):
        b = optimize_plan(leg, nodes, ref, bounds, DEFAULT_WEIGHTS, init, seed=7, max_evals=500)
    assert a.budget_exhausted and b.budget_exhausted
    assert a.cost == b.cost
    assert a.cost <= a.cost_init
    assert np.array_equal(a.plans[0].w, b.plans[0].w)
    assert np.array_equal(a.plans[1].alpha, b.plans[1].alpha)


def test_commands_round_trip():
    nodes = NodeSequence(np.array([0.0, 0.4, 0.8, 1.2]))
    hip, _ = planted_pair(nodes, PlanBounds())
    commands = plan_to_commands(hip)
    assert len(commands) == hip.n_segments
    assert np.array_equal([c.t0 for c in commands], nodes.times[:-1])
    rebuilt = commands_to_plan(commands, t_end=1.2, w0=hip.w0)
    tq = np.linspace(0.0, 1.2, 601)
    assert np.array_equal(eval_velocity(rebuilt, tq), eval_velocity(hip, tq))


def test_single_command_for_endpoint_nodes():
    plan = simple_plan(w0=0.0, w=(1.0,), alpha=(2.0,), times=(0.0, 1.0))
    commands = plan_to_commands(plan)
    assert len(commands) == 1
    assert commands[0].t0 == 0.0


def test_default_plans_respect_bounds():
    profile = synthetic_walk(dt=5e-3)
    nodes = NodeSequence(np.array([0.0, 0.3, 0.9, 1.2]))
    bounds = PlanBounds(w_min=-1.0, w_max=1.0, a_min=-10.0, a_max=10.0)
    hip, knee = default_plans(profile, nodes, bounds)
    for plan in (hip, knee):
        assert np.all(plan.w <= 1.0) and np.all(plan.w >= -1.0)
        assert np.all(np.abs(plan.alpha) <= 10.0)
        assert bounds.w_min <= plan.w0 <= bounds.w_max
