"""State-dependent Riccati equation tracking control for the two-link leg.

The tracking error x = [theta - theta_d, omega - omega_d, zeta] obeys

    xdot = A(x) x + B(x) u,   u = tau - tau_d,

where the 5th state zeta (zetadot = -eta * zeta, zeta(0) = 1) absorbs the
residual forcing g_f produced by evaluating the dynamics matrices at the
actual instead of the desired state.  At each control step the CARE for
(A(x), B(x), Q, R) is solved and u = -R^-1 B^T P x is applied on top of
the feedforward torque of the desired profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    JointState,
    LegParams,
    coriolis_matrix,
    forward_dynamics,
    gravity_matrix,
    inverse_dynamics_series,
    mass_matrix,
    rk4_step,
)
from .errors import SimulationDiverged, ValidationError
from .gait import GaitProfile
from .riccati import CareProblem, solve_care

__all__ = [
    "ControlGains",
    "DesiredSample",
    "ErrorState",
    "SdcModel",
    "TrackingResult",
    "DEFAULT_GAINS",
    "g_f_term",
    "build_sdc",
    "sdre_feedback",
    "simulate_tracking",
]


def _sym_psd(M, name: str, size: int, strict: bool) -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1 and arr.size == size:
        arr = np.diag(arr)
    if arr.shape != (size, size):
        raise ValidationError(f"{name} must be {size}x{size} (or a length-{size} diagonal)")
    if not np.allclose(arr, arr.T, atol=1e-12, rtol=0.0):
        raise ValidationError(f"{name} must be symmetric")
    low = np.min(np.linalg.eigvalsh(arr))
    if strict and low <= 0.0:
        raise ValidationError(f"{name} must be positive definite")
    if not strict and low < -1e-10:
        raise ValidationError(f"{name} must be positive semidefinite")
    return arr


@dataclass(frozen=True)
class ControlGains:
    """Weights of the tracking cost: 5x5 Q >= 0, 2x2 R > 0, and the decay
    rate eta > 0 of the auxiliary state."""

    Q: np.ndarray
    R: np.ndarray
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "Q", _sym_psd(self.Q, "Q", 5, strict=False))
        object.__setattr__(self, "R", _sym_psd(self.R, "R", 2, strict=True))
        if not np.isfinite(self.eta) or self.eta <= 0.0:
            raise ValidationError(f"eta must be > 0, got {self.eta}")


#: Weights used throughout the bundled demos and acceptance runs.
DEFAULT_GAINS = ControlGains(Q=np.diag([500.0, 500.0, 20.0, 20.0, 1.0]), R=np.diag([20.0, 20.0]))


@dataclass(frozen=True)
class DesiredSample:
    """Desired angles, velocities and accelerations at one time."""

    theta: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        for name in ("theta", "omega", "alpha"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(2)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class ErrorState:
    """Tracking error [theta error, velocity error, zeta] as a 5-vector."""

    x_theta: np.ndarray
    x_w: np.ndarray
    zeta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x_theta", np.asarray(self.x_theta, dtype=float).reshape(2))
        object.__setattr__(self, "x_w", np.asarray(self.x_w, dtype=float).reshape(2))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x_theta, self.x_w, [self.zeta]])


@dataclass(frozen=True)
class SdcModel:
    """State-dependent coefficient form: xdot = A x + B u, A 5x5, B 5x2."""

    A: np.ndarray
    B: np.ndarray


def g_f_term(p: LegParams, state: JointState, desired: DesiredSample) -> np.ndarray:
    """Residual forcing from evaluating the dynamics matrices at the actual
    versus the desired state:

    g_f = (M - M_d) alpha_d + (V - V_d) omega_d + (G - G_d) theta_d
    """
    dM = mass_matrix(p, state.theta) - mass_matrix(p, desired.theta)
    dV = coriolis_matrix(p, state.theta, state.omega) - coriolis_matrix(
        p, desired.theta, desired.omega
    )
    dG = gravity_matrix(p, state.theta) - gravity_matrix(p, desired.theta)
    return dM @ desired.alpha + dV @ desired.omega + dG @ desired.theta


def build_sdc(
    p: LegParams, x: ErrorState, desired: DesiredSample, gains: ControlGains
) -> SdcModel:
    """Assemble A(x), B(x) for the 5-state error dynamics.

    A = [[0, I, 0], [-M^-1 G, -M^-1 V, -M^-1 g_f], [0, 0, -eta]] and
    B = [[0], [M^-1], [0]], with M, V, G evaluated at the actual state
    (error plus desired).
    """
    theta = x.x_theta + desired.theta
    omega = x.x_w + desired.omega
    M = mass_matrix(p, theta)
    Minv = np.linalg.inv(M)
    G = gravity_matrix(p, theta)
    V = coriolis_matrix(p, theta, omega)
    gf = g_f_term(p, JointState(theta, omega), desired)

    A = np.zeros((5, 5))
    A[0:2, 2:4] = np.eye(2)
    A[2:4, 0:2] = -Minv @ G
    A[2:4, 2:4] = -Minv @ V
    A[2:4, 4] = -Minv @ gf
    A[4, 4] = -gains.eta
    B = np.zeros((5, 2))
    B[2:4, :] = Minv
    return SdcModel(A=A, B=B)


def sdre_feedback(model: SdcModel, gains: ControlGains, x: ErrorState, solution=None) -> np.ndarray:
    """Pointwise optimal feedback u = -R^-1 B^T P x for the SDC model.

    The CARE for (A, B, Q, R) is solved unless a precomputed solution is
    supplied.  The torque applied to the leg is tau = tau_d + u.
    """
    if solution is None:
        solution = solve_care(CareProblem(model.A, model.B, gains.Q, gains.R))
    return -np.linalg.solve(gains.R, model.B.T @ (solution.P @ x.vector()))


@dataclass(frozen=True)
class TrackingResult:
    """Closed-loop tracking trajectories and per-step solver diagnostics."""

    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    tau: np.ndarray
    tau_d: np.ndarray
    theta_d: np.ndarray
    omega_d: np.ndarray
    alpha_d: np.ndarray
    u: np.ndarray
    zeta: np.ndarray
    care_residuals: np.ndarray = field(repr=False)
    closed_loop_margins: np.ndarray = field(repr=False)

    @property
    def err(self) -> np.ndarray:
        """Joint-angle tracking error theta - theta_d, (N, 2) rad."""
        return self.theta - self.theta_d

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def rmse_deg(self) -> np.ndarray:
        """Per-joint RMS angle error in degrees."""
        return np.degrees(np.sqrt(np.mean(self.err**2, axis=0)))

    def to_csv(self, path) -> None:
        header = "t,theta1,theta2,omega1,omega2,tau1,tau2,tau_d1,tau_d2,err1,err2"
        data = np.column_stack(
            [self.t, self.theta, self.omega, self.tau, self.tau_d, self.err]
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def simulate_tracking(
    p: LegParams,
    profile: GaitProfile,
    gains: ControlGains = DEFAULT_GAINS,
    dt: float = 1e-3,
    care_every: int = 1,
    initial_error: np.ndarray | None = None,
    divergence_bound: float = 1e3,
) -> TrackingResult:
    """Track a gait profile in closed loop with SDRE feedback.

    The plant integrates with fixed-step RK4 under the torque
    tau = tau_d + u held constant over each dt step; the SDC model is
    rebuilt every step and the CARE re-solved every ``care_every`` steps
    (the previous P is reused in between).

    ``initial_error`` is an optional [dtheta1, dtheta2, domega1, domega2]
    offset from the profile start.  Raises SimulationDiverged when the
    error max-norm exceeds ``divergence_bound``.
    """
    if not dt > 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if care_every < 1:
        raise ValidationError(f"care_every must be >= 1, got {care_every}")
    n = int(np.floor(profile.duration / dt + 1e-9)) + 1
    if n < 2:
        raise ValidationError("profile shorter than one simulation step")
    ts = profile.t[0] + np.arange(n) * dt
    theta_d, omega_d, alpha_d = profile.sample(ts)
    tau_d = inverse_dynamics_series(p, theta_d, omega_d, alpha_d)

    offset = np.zeros(4) if initial_error is None else np.asarray(initial_error, float).reshape(4)
    theta = theta_d[0] + offset[:2]
    omega = omega_d[0] + offset[2:]
    zeta = 1.0
    decay = float(np.exp(-gains.eta * dt))

    theta_hist = np.empty((n, 2))
    omega_hist = np.empty((n, 2))
    tau_hist = np.empty((n, 2))
    u_hist = np.empty((n, 2))
    zeta_hist = np.empty(n)
    residuals = []
    margins = []

    solution = None
    for k in range(n):
        x = ErrorState(theta - theta_d[k], omega - omega_d[k], zeta)
        if np.max(np.abs(x.vector())) > divergence_bound:
            raise SimulationDiverged(
                f"error max-norm exceeded {divergence_bound:g} at t = {ts[k]:.4f} s"
            )
        desired = DesiredSample(theta_d[k], omega_d[k], alpha_d[k])
        model = build_sdc(p, x, desired, gains)
        if solution is None or k % care_every == 0:
            solution = solve_care(CareProblem(model.A, model.B, gains.Q, gains.R))
            residuals.append(solution.residual_norm)
            margins.append(float(np.max(solution.closed_loop_eigs.real)))
        u = sdre_feedback(model, gains, x, solution=solution)
        tau = tau_d[k] + u

        theta_hist[k] = theta
        omega_hist[k] = omega
        tau_hist[k] = tau
        u_hist[k] = u
        zeta_hist[k] = zeta

        if k < n - 1:
            state = rk4_step(p, JointState(theta, omega), tau, dt)
            theta, omega = state.theta, state.omega
            zeta *= decay

    return TrackingResult(
        t=ts,
        theta=theta_hist,
        omega=omega_hist,
        tau=tau_hist,
        tau_d=tau_d,
        theta_d=theta_d,
        omega_d=omega_d,
        alpha_d=alpha_d,
        u=u_hist,
        zeta=zeta_hist,
        care_residuals=np.asarray(residuals),
        closed_loop_margins=np.asarray(margins),
    )
