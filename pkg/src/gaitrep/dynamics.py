"""Rigid-body dynamics of one simplified leg: a hip/knee double pendulum.

The thigh (length l1) swings about the hip, the lower leg (length l2)
about the knee; both joints are driven by servo torques.  Link masses are
uniformly distributed, the knee motor mass m2 rides at the end of the
thigh, and the hip motor mass m1 sits on the fixed hip axis (zero moment
arm, so it never enters the matrices).  The equations of motion are
written in the form

    tau = M(theta) @ thetadd + V(theta, omega) @ omega + G(theta) @ theta

where G is a diagonal gravity matrix built from sin(x)/x so that
G(theta) @ theta equals the exact gravity torque while G itself stays
finite at theta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "LegParams",
    "JointState",
    "JointTorque",
    "DEFAULT_LEG",
    "mass_matrix",
    "coriolis_matrix",
    "gravity_matrix",
    "inverse_dynamics",
    "inverse_dynamics_series",
    "forward_dynamics",
    "rk4_step",
    "mechanical_energy",
]


def _pair(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValidationError(f"{name} must have exactly 2 entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class LegParams:
    """Physical constants of one leg.

    Attributes
    ----------
    l1, l2 : float
        Thigh and lower-leg lengths (m).
    m1, m2 : float
        Hip and knee servo motor masses (kg).  m1 is carried for
        completeness but sits on the hip axis and does not appear in the
        dynamics matrices.
    mc1, mc2 : float
        Thigh and lower-leg masses (kg).
    g : float
        Gravitational acceleration (m/s^2).
    """

    l1: float
    l2: float
    m1: float
    m2: float
    mc1: float
    mc2: float
    g: float = 9.81

    def __post_init__(self):
        for name in ("l1", "l2", "m1", "m2", "mc1", "mc2", "g"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValidationError(f"LegParams.{name} must be finite and > 0, got {value!r}")

    @property
    def inertia1(self) -> float:
        """Thigh inertia about its center of mass, mc1*l1^2/12."""
        return self.mc1 * self.l1**2 / 12.0

    @property
    def inertia2(self) -> float:
        """Lower-leg inertia about its center of mass, mc2*l2^2/12."""
        return self.mc2 * self.l2**2 / 12.0


#: Constants of the desk-scale reference leg used by the bundled demos and tests.
DEFAULT_LEG = LegParams(l1=0.251, l2=0.28, m1=0.876, m2=0.876, mc1=2.89, mc2=3.242)


@dataclass(frozen=True)
class JointState:
    """Joint angles and velocities of one leg: theta = [hip, knee] (rad)."""

    theta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _pair(self.theta, "theta"))
        object.__setattr__(self, "omega", _pair(self.omega, "omega"))


@dataclass(frozen=True)
class JointTorque:
    """Servo torques tau = [hip, knee] (N*m)."""

    tau: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", _pair(self.tau, "tau"))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.tau, dtype=dtype)


def _sinc(x: np.ndarray) -> np.ndarray:
    """sin(x)/x with the removable singularity at 0 evaluated as 1.

    Near zero a Taylor expansion 1 - x^2/6 + x^4/120 is used instead of the
    direct quotient.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    # np.where evaluates both branches; guard the quotient against x == 0.
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x**2 / 6.0 + x**4 / 120.0, np.sin(safe) / safe)


def mass_matrix(p: LegParams, theta) -> np.ndarray:
    """Symmetric positive definite 2x2 mass matrix M(theta).

    M11 = mc1*l1^2/4 + I1 + m2*l1^2 + mc2*l1^2,
    M12 = M21 = mc2*l1*l2*cos(theta1 - theta2)/2,
    M22 = mc2*l2^2/4 + I2.
    """
    th = _pair(theta, "theta")
    m11 = 0.25 * p.mc1 * p.l1**2 + p.inertia1 + p.m2 * p.l1**2 + p.mc2 * p.l1**2
    m22 = 0.25 * p.mc2 * p.l2**2 + p.inertia2
    m12 = 0.5 * p.mc2 * p.l1 * p.l2 * np.cos(th[0] - th[1])
    return np.array([[m11, m12], [m12, m22]])


def coriolis_matrix(p: LegParams, theta, omega) -> np.ndarray:
    """Velocity-coupling 2x2 matrix V(theta, omega) with zero diagonal.

    V12 = mc2*l1*l2*sin(theta1 - theta2)*omega2/2,
    V21 = -mc2*l1*l2*sin(theta1 - theta2)*omega1/2.
    """
    th = _pair(theta, "theta")
    om = _pair(omega, "omega")
    k = 0.5 * p.mc2 * p.l1 * p.l2 * np.sin(th[0] - th[1])
    return np.array([[0.0, k * om[1]], [-k * om[0], 0.0]])


def gravity_matrix(p: LegParams, theta) -> np.ndarray:
    """Diagonal state-dependent gravity matrix G(theta).

    G11 = (m2 + mc1/2 + mc2)*g*l1 * sin(theta1)/theta1,
    G22 = mc2*g*l2/2 * sin(theta2)/theta2,

    with sin(x)/x -> 1 at x = 0, so G(theta) @ theta reproduces the exact
    gravity torque and theta = 0 raises no division error.
    """
    th = _pair(theta, "theta")
    k1 = (p.m2 + 0.5 * p.mc1 + p.mc2) * p.g * p.l1
    k2 = 0.5 * p.mc2 * p.g * p.l2
    s = _sinc(th)
    return np.array([[k1 * s[0], 0.0], [0.0, k2 * s[1]]])


def inverse_dynamics(p: LegParams, theta, omega, alpha) -> JointTorque:
    """Torque required for accelerations alpha at (theta, omega).

    tau = M(theta) @ alpha + V(theta, omega) @ omega + G(theta) @ theta
    """
    th = _pair(theta, "theta")
    om = _pair(omega, "omega")
    al = _pair(alpha, "alpha")
    tau = mass_matrix(p, th) @ al + coriolis_matrix(p, th, om) @ om + gravity_matrix(p, th) @ th
    return JointTorque(tau)


def inverse_dynamics_series(p: LegParams, theta, omega, alpha) -> np.ndarray:
    """Vectorized inverse dynamics over (N, 2) trajectories.

    Evaluates the same expression as :func:`inverse_dynamics` sample by
    sample and returns an (N, 2) torque array.
    """
    th = np.asarray(theta, dtype=float)
    om = np.asarray(omega, dtype=float)
    al = np.asarray(alpha, dtype=float)
    if th.ndim != 2 or th.shape[1] != 2 or th.shape != om.shape or th.shape != al.shape:
        raise ValidationError(
            f"expected matching (N, 2) arrays, got {th.shape}, {om.shape}, {al.shape}"
        )
    m11 = 0.25 * p.mc1 * p.l1**2 + p.inertia1 + p.m2 * p.l1**2 + p.mc2 * p.l1**2
    m22 = 0.25 * p.mc2 * p.l2**2 + p.inertia2
    kc = 0.5 * p.mc2 * p.l1 * p.l2
    d = th[:, 0] - th[:, 1]
    m12 = kc * np.cos(d)
    ks = kc * np.sin(d)
    k1 = (p.m2 + 0.5 * p.mc1 + p.mc2) * p.g * p.l1
    k2 = 0.5 * p.mc2 * p.g * p.l2
    s = _sinc(th)
    tau1 = m11 * al[:, 0] + m12 * al[:, 1] + ks * om[:, 1] * om[:, 1] + k1 * s[:, 0] * th[:, 0]
    tau2 = m12 * al[:, 0] + m22 * al[:, 1] - ks * om[:, 0] * om[:, 0] + k2 * s[:, 1] * th[:, 1]
    return np.column_stack([tau1, tau2])


def forward_dynamics(p: LegParams, state: JointState, tau) -> np.ndarray:
    """Joint accelerations produced by torque tau at the given state.

    Solves M(theta) @ alpha = tau - V @ omega - G @ theta.  M is positive
    definite for every theta, so the solve never fails.
    """
    t = np.asarray(tau, dtype=float).reshape(2)
    rhs = (
        t
        - coriolis_matrix(p, state.theta, state.omega) @ state.omega
        - gravity_matrix(p, state.theta) @ state.theta
    )
    return np.linalg.solve(mass_matrix(p, state.theta), rhs)


def rk4_step(p: LegParams, state: JointState, tau, dt: float) -> JointState:
    """Advance (theta, omega) one classical Runge-Kutta step under constant tau."""
    if not dt > 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    t = np.asarray(tau, dtype=float).reshape(2)

    def deriv(y: np.ndarray) -> np.ndarray:
        st = JointState(y[:2], y[2:])
        return np.concatenate([y[2:], forward_dynamics(p, st, t)])

    y0 = np.concatenate([state.theta, state.omega])
    k1 = deriv(y0)
    k2 = deriv(y0 + 0.5 * dt * k1)
    k3 = deriv(y0 + 0.5 * dt * k2)
    k4 = deriv(y0 + dt * k3)
    y1 = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return JointState(y1[:2], y1[2:])


def mechanical_energy(p: LegParams, state: JointState) -> float:
    """Total mechanical energy T + V of the unforced leg.

    T uses the link inertias plus the knee-motor point mass at the thigh
    tip; V measures both link potentials from the hip axis with theta = 0
    hanging straight down.
    """
    th, om = state.theta, state.omega
    t_kin = (
        0.125 * p.mc1 * p.l1**2 * om[0] ** 2
        + 0.5 * p.inertia1 * om[0] ** 2
        + 0.5 * p.m2 * p.l1**2 * om[0] ** 2
        + 0.5
        * p.mc2
        * (
            p.l1**2 * om[0] ** 2
            + 0.25 * p.l2**2 * om[1] ** 2
            + p.l1 * p.l2 * om[0] * om[1] * np.cos(th[0] - th[1])
        )
        + 0.5 * p.inertia2 * om[1] ** 2
    )
    v_pot = (
        -p.m2 * p.g * p.l1 * np.cos(th[0])
        - 0.5 * p.mc1 * p.g * p.l1 * np.cos(th[0])
        - p.mc2 * p.g * p.l1 * np.cos(th[0])
        - 0.5 * p.mc2 * p.g * p.l2 * np.cos(th[1])
    )
    return float(t_kin + v_pot)
