import numpy as np
import pytest

from gaitrep import (
    JointState,
    LegParams,
    ValidationError,
    coriolis_matrix,
    forward_dynamics,
    gravity_matrix,
    inverse_dynamics,
    inverse_dynamics_series,
    mass_matrix,
    mechanical_energy,
    rk4_step,
)


def test_leg_params_rejects_nonpositive():
    with pytest.raises(ValidationError):
        LegParams(l1=0.251, l2=0.28, m1=0.876, m2=0.876, mc1=2.89, mc2=0.0)
    with pytest.raises(ValidationError):
        LegParams(l1=-0.1, l2=0.28, m1=0.876, m2=0.876, mc1=2.89, mc2=3.242)
    with pytest.raises(ValidationError):
        LegParams(l1=0.251, l2=0.28, m1=0.876, m2=0.876, mc1=2.89, mc2=3.242, g=0.0)


def test_leg_inertias_derived(leg):
    assert leg.inertia1 == leg.mc1 * leg.l1**2 / 12.0
    assert leg.inertia2 == leg.mc2 * leg.l2**2 / 12.0


def test_mass_matrix_reference_value(leg):
    # Hand evaluation, term by term, at theta = 0 with the reference leg.
    m11 = (
        0.25 * 2.89 * 0.251**2
        + 2.89 * 0.251**2 / 12.0
        + 0.876 * 0.251**2
        + 3.242 * 0.251**2
    )
    m22 = 0.25 * 3.242 * 0.28**2 + 3.242 * 0.28**2 / 12.0
    m12 = 0.5 * 3.242 * 0.251 * 0.28
    M = mass_matrix(leg, [0.0, 0.0])
    assert M[0, 0] == pytest.approx(m11, rel=1e-14)
    assert M[1, 1] == pytest.approx(m22, rel=1e-14)
    assert M[0, 1] == pytest.approx(m12, rel=1e-14)


def test_mass_matrix_off_diagonal_vanishes_at_right_angle(leg):
    M = mass_matrix(leg, [np.pi / 2, 0.0])
    # cos(pi/2) in floats is ~6e-17, not exactly zero.
    assert abs(M[0, 1]) < 1e-16
    assert abs(M[1, 0]) < 1e-16


def test_mass_matrix_symmetric_and_positive_definite(leg, rng):
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 2)
        M = mass_matrix(leg, theta)
        assert M[0, 1] == M[1, 0]
        assert np.all(np.linalg.eigvalsh(M) > 0.0)


def test_coriolis_zero_cases(leg, rng):
    assert np.array_equal(coriolis_matrix(leg, [0.3, -0.7], [0.0, 0.0]), np.zeros((2, 2)))
    theta = rng.uniform(-1, 1)
    assert np.array_equal(
        coriolis_matrix(leg, [theta, theta], [1.3, -2.1]), np.zeros((2, 2))
    )


def test_coriolis_reference_value(leg):
    # Delta theta = pi/2 makes sin exactly 1; omega = [1, 1].
    V = coriolis_matrix(leg, [np.pi / 2, 0.0], [1.0, 1.0])
    expected = 0.5 * 3.242 * 0.251 * 0.28
    assert V[0, 1] == pytest.approx(expected, rel=1e-14)
    assert V[1, 0] == pytest.approx(-expected, rel=1e-14)
    assert V[0, 0] == 0.0 and V[1, 1] == 0.0


def test_coriolis_structural_swap_identity(leg, rng):
    # V12 with omega (a, b) equals -V21 with omega (b, a), exactly.
    for _ in range(50):
        theta = rng.uniform(-np.pi, np.pi, 2)
        a, b = rng.uniform(-3, 3, 2)
        assert (
            coriolis_matrix(leg, theta, [a, b])[0, 1]
            == -coriolis_matrix(leg, theta, [b, a])[1, 0]
        )


def test_coriolis_power_identity(leg, rng):
    # omega^T (Mdot/2 - V) omega = 0 along the flow.
    h = 1e-6
    for _ in range(50):
        theta = rng.uniform(-np.pi, np.pi, 2)
        omega = rng.uniform(-3, 3, 2)
        Mdot = (mass_matrix(leg, theta + h * omega) - mass_matrix(leg, theta - h * omega)) / (
            2 * h
        )
        V = coriolis_matrix(leg, theta, omega)
        assert abs(omega @ (0.5 * Mdot - V) @ omega) < 1e-6


def test_gravity_matrix_at_zero_is_exact_limit(leg):
    G = gravity_matrix(leg, [0.0, 0.0])
    g11 = (leg.m2 + 0.5 * leg.mc1 + leg.mc2) * leg.g * leg.l1
    g22 = 0.5 * leg.mc2 * leg.g * leg.l2
    assert G[0, 0] == g11
    assert G[1, 1] == g22
    assert G[0, 1] == 0.0 and G[1, 0] == 0.0


def test_gravity_matrix_vanishes_at_pi(leg):
    G = gravity_matrix(leg, [np.pi, np.pi])
    assert np.max(np.abs(G)) < 1e-14


def test_gravity_matrix_continuous_at_zero(leg):
    G0 = gravity_matrix(leg, [0.0, 0.0])
    Ge = gravity_matrix(leg, [1e-6, 1e-6])
    assert np.max(np.abs(Ge - G0)) < 1e-8


def test_gravity_torque_matches_potential_gradient(leg, rng):
    # Oracle: central differences of the potential energy term.
    h = 1e-6
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, 2)
        torque = gravity_matrix(leg, theta) @ theta
        for j in range(2):
            dp = theta.copy()
            dm = theta.copy()
            dp[j] += h
            dm[j] -= h
            grad = (
                mechanical_energy(leg, JointState(dp, [0, 0]))
                - mechanical_energy(leg, JointState(dm, [0, 0]))
            ) / (2 * h)
            assert torque[j] == pytest.approx(grad, abs=1e-6)


def test_inverse_dynamics_zero_and_static_hold(leg):
    assert np.array_equal(
        np.asarray(inverse_dynamics(leg, [0, 0], [0, 0], [0, 0])), np.zeros(2)
    )
    theta = np.array([0.3, 0.2])
    tau = np.asarray(inverse_dynamics(leg, theta, [0, 0], [0, 0]))
    assert np.allclose(tau, gravity_matrix(leg, theta) @ theta, rtol=0, atol=0)


def test_forward_inverse_round_trip(leg, rng):
    for _ in range(200):
        theta = rng.uniform(-np.pi, np.pi, 2)
        omega = rng.uniform(-5, 5, 2)
        alpha = rng.uniform(-20, 20, 2)
        tau = inverse_dynamics(leg, theta, omega, alpha)
        back = forward_dynamics(leg, JointState(theta, omega), tau)
        assert np.max(np.abs(back - alpha)) < 1e-10


def test_forward_dynamics_equilibria(leg):
    theta = np.array([0.4, -0.2])
    tau = gravity_matrix(leg, theta) @ theta
    alpha = forward_dynamics(leg, JointState(theta, [0, 0]), tau)
    assert np.max(np.abs(alpha)) < 1e-12
    assert np.array_equal(
        forward_dynamics(leg, JointState([0, 0], [0, 0]), [0, 0]), np.zeros(2)
    )


def test_inverse_dynamics_series_matches_scalar(leg, rng):
    theta = rng.uniform(-np.pi, np.pi, (50, 2))
    omega = rng.uniform(-5, 5, (50, 2))
    alpha = rng.uniform(-20, 20, (50, 2))
    batch = inverse_dynamics_series(leg, theta, omega, alpha)
    for k in range(50):
        one = np.asarray(inverse_dynamics(leg, theta[k], omega[k], alpha[k]))
        assert np.allclose(batch[k], one, rtol=0, atol=1e-13)


def test_rk4_rejects_bad_dt(leg):
    with pytest.raises(ValidationError):
        rk4_step(leg, JointState([0, 0], [0, 0]), [0, 0], 0.0)
    with pytest.raises(ValidationError):
        rk4_step(leg, JointState([0, 0], [0, 0]), [0, 0], -1e-3)


def test_rk4_small_step_limit(leg):
    state = JointState([0.2, -0.1], [0.5, 0.3])
    tau = np.array([0.5, -0.2])
    deltas = []
    for dt in (1e-3, 5e-4):
        nxt = rk4_step(leg, state, tau, dt)
        deltas.append(
            np.linalg.norm(np.concatenate([nxt.theta - state.theta, nxt.omega - state.omega]))
        )
    # One-step change scales linearly with dt.
    assert deltas[0] / deltas[1] == pytest.approx(2.0, rel=0.05)


def test_rk4_is_fourth_order(leg):
    # Fixed horizon, dt halved: global error drops by ~2^4.
    state = JointState([0.3, -0.2], [1.0, -0.5])
    tau = np.array([0.0, 0.0])
    horizon = 0.1

    def solve(dt):
        st = state
        for _ in range(int(round(horizon / dt))):
            st = rk4_step(leg, st, tau, dt)
        return np.concatenate([st.theta, st.omega])

    ref = solve(1e-4)
    err_h = np.linalg.norm(solve(4e-3) - ref)
    err_h2 = np.linalg.norm(solve(2e-3) - ref)
    assert err_h / err_h2 == pytest.approx(16.0, rel=0.3)


def test_energy_conservation_unforced_swing(leg):
    state = JointState([0.1, 0.1], [0.0, 0.0])
    e0 = mechanical_energy(leg, state)
    for _ in range(1000):
        state = rk4_step(leg, state, [0.0, 0.0], 1e-3)
    drift = abs(mechanical_energy(leg, state) - e0) / abs(e0)
    assert drift < 1e-6
