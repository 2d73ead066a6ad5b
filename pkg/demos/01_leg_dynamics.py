"""Tour of the two-link leg dynamics.

Evaluates the mass/velocity-coupling/gravity matrices at a few poses,
verifies that forward and inverse dynamics invert each other, and lets the
unforced leg swing for a second to show that RK4 holds mechanical energy.
Figures land in demos/output/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gaitrep import (
    DEFAULT_LEG,
    JointState,
    forward_dynamics,
    gravity_matrix,
    inverse_dynamics,
    mass_matrix,
    mechanical_energy,
    rk4_step,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

p = DEFAULT_LEG
print("Reference leg:", p)

# The mass matrix couples the joints through cos(theta1 - theta2); the
# coupling disappears when the links are at right angles.
for pose in ([0.0, 0.0], [0.3, -0.2], [np.pi / 2, 0.0]):
    M = mass_matrix(p, pose)
    print(f"theta = {pose}:  M12 = {M[0, 1]: .5f},  eigs = {np.linalg.eigvalsh(M)}")

# Gravity torque stays finite at the hanging pose thanks to sin(x)/x.
print("G(0) diagonal:", np.diag(gravity_matrix(p, [0.0, 0.0])))

# Inverse dynamics answers "what torque produces these accelerations";
# forward dynamics inverts it exactly.
theta, omega, alpha = [0.4, -0.1], [1.0, -0.5], [2.0, 3.0]
tau = inverse_dynamics(p, theta, omega, alpha)
alpha_back = forward_dynamics(p, JointState(theta, omega), tau)
print("requested accel:", alpha, " recovered:", alpha_back)

# Free swing: release from a small angle and integrate with RK4.
dt, steps = 1e-3, 3000
state = JointState([0.35, 0.15], [0.0, 0.0])
e0 = mechanical_energy(p, state)
history = np.empty((steps + 1, 3))
history[0] = [state.theta[0], state.theta[1], e0]
for k in range(steps):
    state = rk4_step(p, state, [0.0, 0.0], dt)
    history[k + 1] = [state.theta[0], state.theta[1], mechanical_energy(p, state)]

t = np.arange(steps + 1) * dt
drift = np.abs(history[:, 2] - e0) / abs(e0)
print(f"energy drift after {t[-1]:.1f}s of free swing: {drift[-1]:.2e} (relative)")

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
ax1.plot(t, history[:, 0], label="hip")
ax1.plot(t, history[:, 1], label="knee")
ax1.set_ylabel("angle (rad)")
ax1.legend()
ax1.set_title("Unforced swing from [0.35, 0.15] rad")
ax2.semilogy(t, np.maximum(drift, 1e-17))
ax2.set_ylabel("relative energy drift")
ax2.set_xlabel("time (s)")
fig.tight_layout()
fig.savefig(OUT / "01_free_swing.png", dpi=120)
print("wrote", OUT / "01_free_swing.png")
