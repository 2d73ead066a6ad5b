"""End-to-end comparison: SDRE tracking vs the executed velocity plan.

This mirrors the compare subcommand: simulate the tracking controller,
fit a velocity plan against its torque, then score both methods against
the desired profile and plot the torque traces side by side.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gaitrep import (
    DEFAULT_GAINS,
    DEFAULT_LEG,
    DEFAULT_WEIGHTS,
    default_plans,
    optimize_plan,
    select_nodes,
    simulate_tracking,
    synthetic_squat,
)
from gaitrep.cli import RunConfig, compare_methods

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = RunConfig(profile="synthetic:squat", dt=5e-3, seed=0, starts=3, max_evals=3000)
profile = synthetic_squat(dt=cfg.dt)
tracking = simulate_tracking(DEFAULT_LEG, profile, DEFAULT_GAINS, dt=cfg.dt)

nodes = select_nodes(profile, min_separation=cfg.min_separation)
init = default_plans(profile, nodes, cfg.plan_bounds())
opt = optimize_plan(
    DEFAULT_LEG, nodes, tracking, cfg.plan_bounds(), DEFAULT_WEIGHTS, init,
    n_starts=cfg.starts, seed=cfg.seed, max_evals=cfg.max_evals,
)

report = compare_methods(cfg, profile, tracking, opt.plans)
print(report.to_text())
report.to_csv(OUT / "05_report.csv")
report.torque_series_csv(OUT / "05_torque_series.csv")

fig, axes = plt.subplots(2, 2, figsize=(11, 6), sharex=True)
for j, name in enumerate(("hip", "knee")):
    axes[0, j].plot(report.t, report.tau_ref[:, j], "r", label="profile torque")
    axes[0, j].plot(report.t, report.tau_plan[:, j], "b--", label="plan torque")
    axes[0, j].set_title(f"{name}: executed plan")
    axes[0, j].legend(fontsize=8)
    axes[1, j].plot(report.t, report.tau_ref[:, j], "r", label="profile torque")
    axes[1, j].plot(report.t, report.tau_sdre[:, j], "b--", label="tracking torque")
    axes[1, j].set_title(f"{name}: SDRE tracking")
    axes[1, j].set_xlabel("time (s)")
    axes[1, j].legend(fontsize=8)
axes[0, 0].set_ylabel("torque (N m)")
axes[1, 0].set_ylabel("torque (N m)")
fig.tight_layout()
fig.savefig(OUT / "05_torque_comparison.png", dpi=120)
print("wrote", OUT / "05_torque_comparison.png")
print("wrote", OUT / "05_report.csv")
