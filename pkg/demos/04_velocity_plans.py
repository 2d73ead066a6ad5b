"""Motor-friendly velocity plans: nodes, ramps, and the torque-matching fit.

Picks command times at the acceleration extrema of a walking profile,
builds a heuristic ramp plan, optimizes it against the profile's torque,
and plots the commanded velocity staircase next to the profile velocity.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gaitrep import (
    DEFAULT_LEG,
    DEFAULT_WEIGHTS,
    PlanBounds,
    default_plans,
    eval_velocity,
    optimize_plan,
    plan_cost,
    plan_to_commands,
    select_nodes,
    synthetic_walk,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

profile = synthetic_walk(dt=5e-3)
nodes = select_nodes(profile, min_separation=0.05)
print("command times:", np.round(nodes.times, 3))

bounds = PlanBounds()  # |w| <= 6 rad/s, |a| <= 40 rad/s^2
init = default_plans(profile, nodes, bounds)
print(f"heuristic plan cost: {plan_cost(DEFAULT_LEG, init, profile, DEFAULT_WEIGHTS):.4f}")

opt = optimize_plan(
    DEFAULT_LEG, nodes, profile, bounds, DEFAULT_WEIGHTS, init,
    n_starts=3, seed=0, max_evals=3000,
)
print(f"optimized cost:      {opt.cost:.4f}  (converged: {opt.converged})")

for name, plan in zip(("hip", "knee"), opt.plans):
    print(f"{name} commands:")
    for k, cmd in enumerate(plan_to_commands(plan), start=1):
        print(f"  k={k}: at t={cmd.t0:.3f}s ramp to {cmd.w:+.3f} rad/s at {cmd.alpha:+.2f} rad/s^2")

tq = np.linspace(0.0, profile.duration, 600)
fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
for ax, name, plan, j in zip(axes, ("hip", "knee"), opt.plans, (0, 1)):
    ax.plot(profile.t, profile.theta_dot[:, j], label="profile velocity")
    ax.plot(tq, eval_velocity(plan, tq), label="commanded ramps")
    for t0 in nodes.times:
        ax.axvline(t0, color="gray", lw=0.5, alpha=0.5)
    ax.set_ylabel(f"{name} (rad/s)")
    ax.legend(fontsize=8)
axes[0].set_title("Piecewise-linear velocity commands vs the profile")
axes[1].set_xlabel("time (s)")
fig.tight_layout()
fig.savefig(OUT / "04_velocity_plan.png", dpi=120)
print("wrote", OUT / "04_velocity_plan.png")

fig2, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(opt.trace)
ax.set_xlabel("objective evaluation")
ax.set_ylabel("best cost so far")
ax.set_title("Optimizer convergence trace")
fig2.tight_layout()
fig2.savefig(OUT / "04_cost_trace.png", dpi=120)
print("wrote", OUT / "04_cost_trace.png")
