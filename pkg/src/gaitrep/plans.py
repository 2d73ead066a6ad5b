"""Piecewise-linear velocity plans and the offline torque-matching optimizer.

Between consecutive command times t0^k and t0^{k+1} a joint ramps linearly
from the previous target velocity to w_k with acceleration a_k, then holds
w_k.  The ramp end t1^k = t0^k + (w_k - w_{k-1}) / a_k is implied by the
parameters, never stored.  A plan pair (hip, knee) is scored by the
weighted RMS mismatch between the reference torque and the torque required
to execute the plan, and tuned with bound-projected Nelder-Mead search.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import Bounds, minimize

from .dynamics import LegParams, inverse_dynamics_series
from .errors import (
    DomainMismatch,
    InfeasibleBounds,
    MaxIterationsWarning,
    OutOfDomain,
    ValidationError,
)
from .gait import GaitProfile, NodeSequence
from .sdre import TrackingResult

__all__ = [
    "PlanBounds",
    "VelocityPlan",
    "MotorCommand",
    "PlanTrajectory",
    "PlanOptimization",
    "DEFAULT_WEIGHTS",
    "as_weight_matrix",
    "eval_velocity",
    "integrate_plan",
    "evaluate_plans",
    "plan_cost",
    "optimize_plan",
    "default_plans",
    "plan_to_commands",
    "commands_to_plan",
]

#: Demo/default torque-error weights (diagonal per joint).
DEFAULT_WEIGHTS = np.diag([10.0, 10.0])


def as_weight_matrix(W) -> np.ndarray:
    """Coerce a scalar, length-2 diagonal, or 2x2 diagonal array into the
    2x2 nonnegative diagonal weight matrix."""
    arr = np.asarray(W, dtype=float)
    if arr.ndim == 0:
        arr = np.diag([float(arr), float(arr)])
    elif arr.ndim == 1 and arr.size == 2:
        arr = np.diag(arr)
    if arr.shape != (2, 2):
        raise ValidationError(f"weight matrix must be 2x2, got {arr.shape}")
    if arr[0, 1] != 0.0 or arr[1, 0] != 0.0:
        raise ValidationError("weight matrix must be diagonal")
    if arr[0, 0] < 0.0 or arr[1, 1] < 0.0:
        raise ValidationError("weight entries must be >= 0")
    return arr


@dataclass(frozen=True)
class PlanBounds:
    """Motor velocity/acceleration box constraints (signed)."""

    w_min: float = -6.0
    w_max: float = 6.0
    a_min: float = -40.0
    a_max: float = 40.0

    def __post_init__(self):
        vals = (self.w_min, self.w_max, self.a_min, self.a_max)
        if any(np.isnan(v) for v in vals):
            raise InfeasibleBounds("bounds must not be NaN")
        if self.w_min > self.w_max:
            raise InfeasibleBounds(f"w_min {self.w_min} > w_max {self.w_max}")
        if self.a_min > self.a_max:
            raise InfeasibleBounds(f"a_min {self.a_min} > a_max {self.a_max}")

    def clip_w(self, w):
        return np.clip(w, self.w_min, self.w_max)

    def clip_a(self, a):
        return np.clip(a, self.a_min, self.a_max)


_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class VelocityPlan:
    """One joint's command parameters: per-segment (w_k, a_k) over shared
    node times, entered at velocity w0."""

    nodes: NodeSequence
    w0: float
    w: np.ndarray
    alpha: np.ndarray
    bounds: PlanBounds = PlanBounds()

    def __post_init__(self):
        m = self.nodes.n_segments
        w = np.asarray(self.w, dtype=float).reshape(-1)
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if w.size != m or alpha.size != m:
            raise ValidationError(f"need {m} per-segment parameters, got {w.size}/{alpha.size}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(alpha)) and np.isfinite(self.w0)):
            raise ValidationError("plan parameters must be finite")
        b = self.bounds
        if np.any(w < b.w_min - _BOUND_TOL) or np.any(w > b.w_max + _BOUND_TOL):
            raise ValidationError("target velocities violate bounds")
        if np.any(alpha < b.a_min - _BOUND_TOL) or np.any(alpha > b.a_max + _BOUND_TOL):
            raise ValidationError("accelerations violate bounds")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n_segments(self) -> int:
        return self.nodes.n_segments

    @property
    def duration(self) -> float:
        return self.nodes.duration


@dataclass(frozen=True)
class MotorCommand:
    """One velocity command: at time t0 ramp toward w with acceleration alpha."""

    t0: float
    w: float
    alpha: float


@dataclass(frozen=True)
class _Segment:
    t0: float
    t1: float
    t_end: float
    w_in: float
    w_out: float
    accel: float
    theta_in: float
    theta_at_t1: float
    repaired: bool


def _effective_segments(plan: VelocityPlan, theta0: float = 0.0) -> list[_Segment]:
    """Resolve each segment's executable ramp.

    The stored acceleration is repaired when it cannot realize the target:
    its sign is forced to match w_k - w_{k-1}, and its magnitude is raised
    to the minimum that reaches w_k within the segment when the implied
    ramp would overrun the next node.
    """
    segs: list[_Segment] = []
    w_prev = float(plan.w0)
    theta = float(theta0)
    times = plan.nodes.times
    for i in range(plan.n_segments):
        t0, t_end = float(times[i]), float(times[i + 1])
        w_out = float(plan.w[i])
        dw = w_out - w_prev
        if dw == 0.0:
            t1, accel, repaired = t0, 0.0, False
        else:
            a = float(plan.alpha[i])
            a_eff = abs(a) * (1.0 if dw > 0.0 else -1.0)
            repaired = a_eff != a
            if abs(a_eff) * (t_end - t0) < abs(dw):
                a_eff = dw / (t_end - t0)
                repaired = True
            t1 = min(t0 + dw / a_eff, t_end)
            accel = a_eff
        ramp = t1 - t0
        theta_at_t1 = theta + w_prev * ramp + 0.5 * accel * ramp**2
        segs.append(
            _Segment(t0, t1, t_end, w_prev, w_out, accel, theta, theta_at_t1, repaired)
        )
        theta = theta_at_t1 + w_out * (t_end - t1)
        w_prev = w_out
    return segs


def _eval_single(
    plan: VelocityPlan, theta0: float, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    segs = _effective_segments(plan, theta0)
    nodes = plan.nodes.times
    idx = np.clip(np.searchsorted(nodes, times, side="right") - 1, 0, plan.n_segments - 1)
    theta = np.empty_like(times)
    w = np.empty_like(times)
    a = np.zeros_like(times)
    for i, seg in enumerate(segs):
        mask = idx == i
        if not np.any(mask):
            continue
        dt_loc = times[mask] - seg.t0
        ramp = seg.t1 - seg.t0
        on_ramp = dt_loc <= ramp
        w[mask] = np.where(on_ramp, seg.w_in + seg.accel * dt_loc, seg.w_out)
        theta[mask] = np.where(
            on_ramp,
            seg.theta_in + seg.w_in * dt_loc + 0.5 * seg.accel * dt_loc**2,
            seg.theta_at_t1 + seg.w_out * (dt_loc - ramp),
        )
        a[mask] = np.where(dt_loc < ramp, seg.accel, 0.0)
    return theta, w, a, sum(s.repaired for s in segs)


def _check_domain(plan: VelocityPlan, times: np.ndarray) -> np.ndarray:
    lo, hi = plan.nodes.times[0], plan.nodes.times[-1]
    if np.any(times < lo - 1e-9) or np.any(times > hi + 1e-9):
        raise OutOfDomain(f"query times outside [{lo}, {hi}]")
    return np.clip(times, lo, hi)


def eval_velocity(plan: VelocityPlan, t):
    """Commanded velocity at time t (continuous piecewise-linear; the ramp
    hits w_k exactly at its implied end t1^k)."""
    tq = np.asarray(t, dtype=float)
    scalar = tq.ndim == 0
    tq = _check_domain(plan, np.atleast_1d(tq))
    _, w, _, _ = _eval_single(plan, 0.0, tq)
    return float(w[0]) if scalar else w


@dataclass(frozen=True)
class PlanTrajectory:
    """Sampled execution of one joint's plan: angle, velocity, acceleration."""

    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    accel: np.ndarray
    n_repaired: int = 0


def integrate_plan(plan: VelocityPlan, theta0: float, dt: float) -> PlanTrajectory:
    """Closed-form integration of the velocity plan on a uniform dt grid.

    The angle is quadratic on ramps and linear on plateaus; the sampled
    acceleration is a_k on ramps and 0 on plateaus.
    """
    if not dt > 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    n = int(np.floor(plan.duration / dt + 1e-9)) + 1
    t = plan.nodes.times[0] + np.arange(n) * dt
    theta, w, a, repaired = _eval_single(plan, float(theta0), t)
    return PlanTrajectory(t=t, theta=theta, omega=w, accel=a, n_repaired=repaired)


def _plan_pair(plans) -> tuple[VelocityPlan, VelocityPlan]:
    try:
        hip, knee = plans
    except (TypeError, ValueError) as exc:
        raise ValidationError("expected a (hip, knee) plan pair") from exc
    if not np.allclose(hip.nodes.times, knee.nodes.times, atol=1e-12, rtol=0.0):
        raise ValidationError("hip and knee plans must share node times")
    return hip, knee


def evaluate_plans(
    plans, theta0, times
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Evaluate a (hip, knee) plan pair at the given times.

    Returns (theta, omega, accel) as (N, 2) arrays plus the number of
    repaired segments across both joints.
    """
    hip, knee = _plan_pair(plans)
    th0 = np.asarray(theta0, dtype=float).reshape(2)
    tq = _check_domain(hip, np.atleast_1d(np.asarray(times, dtype=float)))
    cols = [_eval_single(pl, th0[j], tq) for j, pl in enumerate((hip, knee))]
    theta = np.column_stack([c[0] for c in cols])
    omega = np.column_stack([c[1] for c in cols])
    accel = np.column_stack([c[2] for c in cols])
    return theta, omega, accel, cols[0][3] + cols[1][3]


def _reference_arrays(p: LegParams, reference) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalize a torque reference to (t, tau, theta0).

    Accepts a TrackingResult (closed-loop torque) or a GaitProfile (torque
    from inverse dynamics of the profile itself).
    """
    if isinstance(reference, TrackingResult):
        return reference.t, reference.tau, reference.theta_d[0]
    if isinstance(reference, GaitProfile):
        tau = inverse_dynamics_series(
            p, reference.theta, reference.theta_dot, reference.theta_ddot
        )
        return reference.t, tau, reference.theta[0]
    raise ValidationError(f"unsupported reference type {type(reference).__name__}")


def plan_cost(p: LegParams, plans, reference, W=DEFAULT_WEIGHTS) -> float:
    """Weighted RMS torque mismatch of a plan pair against a reference.

    J = sqrt( (1/T) * integral of e(t)^T W e(t) dt ), e = tau_ref - tau_plan,
    where tau_plan is the inverse dynamics of the plan's own trajectories
    and the integral uses trapezoidal quadrature on the reference grid.
    """
    hip, _ = _plan_pair(plans)
    t_ref, tau_ref, theta0 = _reference_arrays(p, reference)
    nodes = hip.nodes.times
    if abs(t_ref[0] - nodes[0]) > 1e-9 or abs(t_ref[-1] - nodes[-1]) > 1e-9:
        raise DomainMismatch(
            f"reference covers [{t_ref[0]}, {t_ref[-1]}], plan covers [{nodes[0]}, {nodes[-1]}]"
        )
    Wm = as_weight_matrix(W)
    theta, omega, accel, _ = evaluate_plans(plans, theta0, t_ref)
    tau_plan = inverse_dynamics_series(p, theta, omega, accel)
    e = tau_ref - tau_plan
    integrand = Wm[0, 0] * e[:, 0] ** 2 + Wm[1, 1] * e[:, 1] ** 2
    horizon = t_ref[-1] - t_ref[0]
    return float(np.sqrt(trapezoid(integrand, t_ref) / horizon))


def default_plans(
    profile: GaitProfile, nodes: NodeSequence, bounds: PlanBounds = PlanBounds()
) -> tuple[VelocityPlan, VelocityPlan]:
    """Heuristic initial plan pair from a profile.

    Each joint starts at the profile's initial velocity, targets the mean
    profile velocity of every segment, and ramps at half the acceleration
    bound with the sign of the velocity change.
    """
    times = nodes.times
    a_mag = 0.5 * max(abs(bounds.a_min), abs(bounds.a_max))
    plans = []
    for j in range(2):
        w0 = float(bounds.clip_w(profile.theta_dot[0, j]))
        w_prev, w, alpha = w0, [], []
        for i in range(nodes.n_segments):
            mask = (profile.t >= times[i]) & (profile.t <= times[i + 1])
            target = float(np.mean(profile.theta_dot[mask, j])) if np.any(mask) else w_prev
            target = float(bounds.clip_w(target))
            alpha.append(float(bounds.clip_a(np.sign(target - w_prev) * a_mag)))
            w.append(target)
            w_prev = target
        plans.append(VelocityPlan(nodes=nodes, w0=w0, w=np.array(w), alpha=np.array(alpha), bounds=bounds))
    return plans[0], plans[1]


@dataclass
class PlanOptimization:
    """Outcome of optimize_plan: tuned plans plus convergence bookkeeping."""

    plans: tuple[VelocityPlan, VelocityPlan]
    cost: float
    cost_init: float
    trace: np.ndarray = field(repr=False)
    n_evals: int = 0
    converged: bool = False
    budget_exhausted: bool = False


def _pack(hip: VelocityPlan, knee: VelocityPlan) -> np.ndarray:
    return np.concatenate([hip.w, hip.alpha, knee.w, knee.alpha])


def _unpack(x: np.ndarray, nodes: NodeSequence, w0: tuple, bounds: PlanBounds):
    m = nodes.n_segments
    hip = VelocityPlan(nodes=nodes, w0=w0[0], w=x[0:m], alpha=x[m : 2 * m], bounds=bounds)
    knee = VelocityPlan(
        nodes=nodes, w0=w0[1], w=x[2 * m : 3 * m], alpha=x[3 * m : 4 * m], bounds=bounds
    )
    return hip, knee


def optimize_plan(
    p: LegParams,
    nodes: NodeSequence,
    reference,
    bounds: PlanBounds,
    W,
    init,
    n_starts: int = 5,
    seed: int = 0,
    max_evals: int | None = None,
    n_polish: int = 8,
) -> PlanOptimization:
    """Minimize plan_cost over per-segment (w, a) of both joints.

    Bound-projected Nelder-Mead from ``n_starts`` starting points (the
    initial plans plus uniformly perturbed copies), followed by
    ``n_polish`` restarts from the incumbent.  The cost trace records the
    best value seen at every objective evaluation, so it is monotone
    non-increasing.  A ``MaxIterationsWarning`` is issued when every run
    stopped on its evaluation budget; the best-so-far result is still
    returned.
    """
    hip0, knee0 = _plan_pair(init)
    m = nodes.n_segments
    w0 = (hip0.w0, knee0.w0)
    lb = np.concatenate([np.full(m, bounds.w_min), np.full(m, bounds.a_min)] * 2)
    ub = np.concatenate([np.full(m, bounds.w_max), np.full(m, bounds.a_max)] * 2)
    x_init = np.clip(_pack(hip0, knee0), lb, ub)

    trace: list[float] = []
    best = {"x": x_init, "f": np.inf}

    def objective(x: np.ndarray) -> float:
        plans = _unpack(np.clip(x, lb, ub), nodes, w0, bounds)
        f = plan_cost(p, plans, reference, W)
        if f < best["f"]:
            best["x"], best["f"] = np.array(x), f
        trace.append(best["f"])
        return f

    cost_init = objective(x_init)

    if np.all(lb == ub):
        plans = _unpack(x_init, nodes, w0, bounds)
        return PlanOptimization(
            plans=plans, cost=cost_init, cost_init=cost_init,
            trace=np.asarray(trace), n_evals=len(trace), converged=True,
        )

    rng = np.random.default_rng(seed)
    budget = max_evals if max_evals is not None else 300 * lb.size
    options = {"maxfev": budget, "xatol": 1e-8, "fatol": 1e-11, "adaptive": True}
    scipy_bounds = Bounds(lb, ub)

    starts = [x_init]
    for _ in range(max(0, n_starts - 1)):
        x = x_init + rng.uniform(-0.1, 0.1, size=lb.size) * (ub - lb)
        starts.append(np.clip(x, lb, ub))

    converged = False
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead", bounds=scipy_bounds, options=options)
        converged |= bool(res.success)
    # Restarting from the incumbent with a fresh simplex escapes NM stalls;
    # a polish round that no longer improves counts as converged.
    for _ in range(n_polish):
        before = best["f"]
        res = minimize(
            objective, best["x"], method="Nelder-Mead", bounds=scipy_bounds, options=options
        )
        converged |= bool(res.success)
        if before - best["f"] <= max(1e-12, 1e-6 * before):
            converged = True
            break

    if not converged:
        warnings.warn(
            "optimizer was still improving when its evaluation budget ran out; "
            "returning best-so-far",
            MaxIterationsWarning,
        )
    plans = _unpack(np.clip(best["x"], lb, ub), nodes, w0, bounds)
    return PlanOptimization(
        plans=plans,
        cost=best["f"],
        cost_init=cost_init,
        trace=np.asarray(trace),
        n_evals=len(trace),
        converged=converged,
        budget_exhausted=not converged,
    )


def plan_to_commands(plan: VelocityPlan) -> list[MotorCommand]:
    """One command per segment, issued at the segment start; each command
    overwrites the previous one.  Accelerations are the executable
    (repaired) values."""
    return [
        MotorCommand(t0=seg.t0, w=seg.w_out, alpha=seg.accel)
        for seg in _effective_segments(plan)
    ]


def commands_to_plan(
    commands: list[MotorCommand], t_end: float, w0: float, bounds: PlanBounds | None = None
) -> VelocityPlan:
    """Rebuild a velocity plan from an ordered command list."""
    if not commands:
        raise ValidationError("command list is empty")
    times = np.array([c.t0 for c in commands] + [t_end])
    if bounds is None:
        bounds = PlanBounds(w_min=-np.inf, w_max=np.inf, a_min=-np.inf, a_max=np.inf)
    return VelocityPlan(
        nodes=NodeSequence(times),
        w0=w0,
        w=np.array([c.w for c in commands]),
        alpha=np.array([c.alpha for c in commands]),
        bounds=bounds,
    )
