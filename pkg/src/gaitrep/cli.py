"""Command-line front end: simulate, parameterize, compare, check, gen-profile.

Every run is driven by a RunConfig assembled from defaults, an optional
JSON config file, and command-line flags (flags win).  Outputs are CSV and
JSON files under --out-dir; angles are radians internally and degrees only
in reports.  Exit codes: 0 success, 2 validation, 3 numerical failure,
4 infeasible optimizer bounds.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import errors
from .dynamics import LegParams, inverse_dynamics_series, mass_matrix
from .gait import (
    GaitProfile,
    load_profile,
    save_profile,
    select_nodes,
    synthetic_squat,
    synthetic_walk,
)
from .plans import (
    PlanBounds,
    default_plans,
    evaluate_plans,
    optimize_plan,
    plan_to_commands,
)
from .riccati import CareProblem, hautus_detectable, hautus_stabilizable, solve_care
from .sdre import (
    ControlGains,
    DesiredSample,
    ErrorState,
    TrackingResult,
    build_sdc,
    simulate_tracking,
)

__all__ = ["RunConfig", "ComparisonReport", "angle_rmse_deg", "compare_methods", "main"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4

_EXIT_CODES = (
    (errors.InfeasibleBounds, EXIT_INFEASIBLE),
    (
        (errors.NotStabilizable, errors.NumericalFailure, errors.SimulationDiverged),
        EXIT_NUMERICAL,
    ),
    (
        (
            errors.ValidationError,
            errors.ParseError,
            errors.OutOfDomain,
            errors.DomainMismatch,
        ),
        EXIT_VALIDATION,
    ),
)


@dataclass
class RunConfig:
    """Resolved settings of one CLI run (JSON file + flag overrides)."""

    leg: dict = field(
        default_factory=lambda: {
            "l1": 0.251, "l2": 0.28, "m1": 0.876, "m2": 0.876,
            "mc1": 2.89, "mc2": 3.242, "g": 9.81,
        }
    )
    q_diag: list = field(default_factory=lambda: [500.0, 500.0, 20.0, 20.0, 1.0])
    r_diag: list = field(default_factory=lambda: [20.0, 20.0])
    eta: float = 1.0
    weights: list = field(default_factory=lambda: [10.0, 10.0])
    dt: float = 1e-3
    care_every: int = 1
    min_separation: float = 0.05
    prominence: float | None = None
    curvature_mode: str = "accel"
    starts: int = 5
    max_evals: int | None = None
    seed: int = 0
    w_min: float = -6.0
    w_max: float = 6.0
    a_min: float = -40.0
    a_max: float = 40.0
    reference: str = "sdre"
    initial_error: list = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    leg_side: str = "left"
    profile: str | None = None
    out_dir: str = "out"

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise errors.ParseError(f"{path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise errors.ValidationError(f"{path}: unknown config keys {sorted(unknown)}")
        return replace(cls(), **data)

    def leg_params(self) -> LegParams:
        return LegParams(**self.leg)

    def gains(self) -> ControlGains:
        return ControlGains(Q=np.asarray(self.q_diag), R=np.asarray(self.r_diag), eta=self.eta)

    def plan_bounds(self) -> PlanBounds:
        return PlanBounds(self.w_min, self.w_max, self.a_min, self.a_max)

    def config_hash(self) -> str:
        # out_dir only places files; it is not part of the computation.
        payload = asdict(self)
        payload.pop("out_dir")
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _resolve_profile(cfg: RunConfig) -> GaitProfile:
    if not cfg.profile:
        raise errors.ValidationError("no profile given (use --profile PATH or synthetic:walk)")
    if cfg.profile == "synthetic:walk":
        return synthetic_walk(dt=cfg.dt)
    if cfg.profile == "synthetic:squat":
        return synthetic_squat(dt=cfg.dt)
    return load_profile(cfg.profile, leg=cfg.leg_side)


def angle_rmse_deg(theta: np.ndarray, theta_ref: np.ndarray) -> np.ndarray:
    """Per-joint RMS difference of two (N, 2) angle arrays, in degrees."""
    theta = np.asarray(theta, dtype=float)
    theta_ref = np.asarray(theta_ref, dtype=float)
    if theta.shape != theta_ref.shape:
        raise errors.DomainMismatch(f"shape mismatch {theta.shape} vs {theta_ref.shape}")
    return np.degrees(np.sqrt(np.mean((theta - theta_ref) ** 2, axis=0)))


def _rms(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean(np.asarray(x, dtype=float) ** 2, axis=0))


@dataclass
class ComparisonReport:
    """RMSE table plus torque time series for the two methods.

    rows: one dict per (motion, side, joint) with angle RMSE in degrees and
    torque RMSE in N*m for each method.  metadata carries the config hash
    and the shared time-grid description.
    """

    rows: list
    t: np.ndarray = field(repr=False)
    tau_ref: np.ndarray = field(repr=False)
    tau_sdre: np.ndarray = field(repr=False)
    tau_plan: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"rows": self.rows, "metadata": self.metadata}

    def to_csv(self, path) -> None:
        cols = [
            "motion", "side", "part",
            "rmse_sdre_deg", "rmse_plan_deg",
            "torque_rmse_sdre", "torque_rmse_plan",
        ]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for row in self.rows:
                fh.write(
                    ",".join(
                        f"{row[c]:.17g}" if isinstance(row[c], float) else str(row[c])
                        for c in cols
                    )
                    + "\n"
                )

    def torque_series_csv(self, path) -> None:
        header = (
            "t,tau_ref1,tau_ref2,tau_sdre1,tau_sdre2,tau_plan1,tau_plan2,"
            "err_sdre1,err_sdre2,err_plan1,err_plan2"
        )
        data = np.column_stack(
            [
                self.t, self.tau_ref, self.tau_sdre, self.tau_plan,
                self.tau_sdre - self.tau_ref, self.tau_plan - self.tau_ref,
            ]
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

    def to_text(self) -> str:
        lines = [
            f"{'Motion':<18}{'Side':<7}{'Part':<6}{'RMSE sdre (deg)':>16}{'RMSE plan (deg)':>17}",
            "-" * 64,
        ]
        for row in self.rows:
            lines.append(
                f"{row['motion']:<18}{row['side']:<7}{row['part']:<6}"
                f"{row['rmse_sdre_deg']:>16.4f}{row['rmse_plan_deg']:>17.4f}"
            )
        return "\n".join(lines)


def compare_methods(
    cfg: RunConfig, profile: GaitProfile, tracking: TrackingResult, plans
) -> ComparisonReport:
    """Score SDRE tracking and the executed plan against the profile.

    Angle RMSE compares each method's joint angles with the desired
    profile; torque RMSE compares each method's torque with the profile's
    own inverse-dynamics torque (tau_d on the tracking grid).
    """
    theta_plan, omega_plan, accel_plan, _ = evaluate_plans(
        plans, tracking.theta_d[0], tracking.t
    )
    tau_plan = inverse_dynamics_series(cfg.leg_params(), theta_plan, omega_plan, accel_plan)

    rmse_sdre = angle_rmse_deg(tracking.theta, tracking.theta_d)
    rmse_plan = angle_rmse_deg(theta_plan, tracking.theta_d)
    tq_sdre = _rms(tracking.tau - tracking.tau_d)
    tq_plan = _rms(tau_plan - tracking.tau_d)

    motion = profile.source
    rows = []
    for j, part in enumerate(("hip", "knee")):
        rows.append(
            {
                "motion": motion,
                "side": cfg.leg_side,
                "part": part,
                "rmse_sdre_deg": float(rmse_sdre[j]),
                "rmse_plan_deg": float(rmse_plan[j]),
                "torque_rmse_sdre": float(tq_sdre[j]),
                "torque_rmse_plan": float(tq_plan[j]),
            }
        )
    metadata = {
        "config_hash": cfg.config_hash(),
        "horizon": [float(tracking.t[0]), float(tracking.t[-1])],
        "n_samples": int(tracking.t.size),
    }
    return ComparisonReport(
        rows=rows,
        t=tracking.t,
        tau_ref=tracking.tau_d,
        tau_sdre=tracking.tau,
        tau_plan=tau_plan,
        metadata=metadata,
    )


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_tracking(cfg: RunConfig, profile: GaitProfile) -> TrackingResult:
    return simulate_tracking(
        cfg.leg_params(),
        profile,
        cfg.gains(),
        dt=cfg.dt,
        care_every=cfg.care_every,
        initial_error=np.asarray(cfg.initial_error, dtype=float),
    )


def _tracking_summary(cfg: RunConfig, profile: GaitProfile, result: TrackingResult) -> dict:
    rmse = result.rmse_deg()
    peak = np.max(np.abs(result.tau), axis=0)
    return {
        "config_hash": cfg.config_hash(),
        "profile_source": profile.source,
        "n_steps": int(result.t.size),
        "horizon": [float(result.t[0]), float(result.t[-1])],
        "rmse_deg": {"hip": float(rmse[0]), "knee": float(rmse[1])},
        "peak_torque": {"hip": float(peak[0]), "knee": float(peak[1])},
        "max_care_residual": float(np.max(result.care_residuals)),
        "max_closed_loop_real": float(np.max(result.closed_loop_margins)),
    }


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> dict:
    profile = _resolve_profile(cfg)
    result = _run_tracking(cfg, profile)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.to_csv(out_dir / "tracking.csv")
    summary = _tracking_summary(cfg, profile, result)
    _write_json(out_dir / "summary.json", summary)
    return summary


def _parameterize(cfg: RunConfig, out_dir: Path):
    profile = _resolve_profile(cfg)
    nodes = select_nodes(
        profile,
        min_separation=cfg.min_separation,
        prominence=cfg.prominence,
        curvature_mode=cfg.curvature_mode,
    )
    tracking = None
    if cfg.reference == "sdre":
        tracking = _run_tracking(cfg, profile)
        reference = tracking
    elif cfg.reference == "human":
        reference = profile
    else:
        raise errors.ValidationError(f"reference must be 'sdre' or 'human', got {cfg.reference!r}")
    bounds = cfg.plan_bounds()
    init = default_plans(profile, nodes, bounds)
    opt = optimize_plan(
        cfg.leg_params(),
        nodes,
        reference,
        bounds,
        np.asarray(cfg.weights),
        init,
        n_starts=cfg.starts,
        seed=cfg.seed,
        max_evals=cfg.max_evals,
    )
    return profile, nodes, tracking, opt


def _write_plan_files(cfg: RunConfig, out_dir: Path, nodes, opt) -> dict:
    hip, knee = opt.plans
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "plan.csv", "w", encoding="utf-8") as fh:
        fh.write("k,t0,w_hip,alpha_hip,w_knee,alpha_knee\n")
        for k in range(nodes.n_segments):
            fh.write(
                f"{k + 1},{nodes.times[k]:.17g},{hip.w[k]:.17g},{hip.alpha[k]:.17g},"
                f"{knee.w[k]:.17g},{knee.alpha[k]:.17g}\n"
            )
    with open(out_dir / "commands.csv", "w", encoding="utf-8") as fh:
        fh.write("joint,k,t0,w,alpha\n")
        for name, plan in (("hip", hip), ("knee", knee)):
            for k, cmd in enumerate(plan_to_commands(plan), start=1):
                fh.write(f"{name},{k},{cmd.t0:.17g},{cmd.w:.17g},{cmd.alpha:.17g}\n")
    with open(out_dir / "cost_trace.csv", "w", encoding="utf-8") as fh:
        fh.write("eval,best_cost\n")
        for i, c in enumerate(opt.trace, start=1):
            fh.write(f"{i},{c:.17g}\n")
    plan_doc = {
        "config_hash": cfg.config_hash(),
        "nodes": [float(v) for v in nodes.times],
        "bounds": {
            "w_min": cfg.w_min, "w_max": cfg.w_max,
            "a_min": cfg.a_min, "a_max": cfg.a_max,
        },
        "hip": {"w0": hip.w0, "w": hip.w.tolist(), "alpha": hip.alpha.tolist()},
        "knee": {"w0": knee.w0, "w": knee.w.tolist(), "alpha": knee.alpha.tolist()},
        "cost": opt.cost,
        "cost_init": opt.cost_init,
        "n_evals": opt.n_evals,
        "converged": opt.converged,
        "budget_exhausted": opt.budget_exhausted,
    }
    _write_json(out_dir / "plan.json", plan_doc)
    return plan_doc


def cmd_parameterize(cfg: RunConfig, out_dir: Path) -> dict:
    profile, nodes, tracking, opt = _parameterize(cfg, out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if tracking is not None:
        tracking.to_csv(out_dir / "reference_tracking.csv")
    return _write_plan_files(cfg, out_dir, nodes, opt)


def cmd_compare(cfg: RunConfig, out_dir: Path) -> dict:
    profile, nodes, tracking, opt = _parameterize(cfg, out_dir)
    if tracking is None:
        tracking = _run_tracking(cfg, profile)
    report = compare_methods(cfg, profile, tracking, opt.plans)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracking.to_csv(out_dir / "tracking.csv")
    _write_plan_files(cfg, out_dir, nodes, opt)
    report.to_csv(out_dir / "report.csv")
    report.torque_series_csv(out_dir / "torque_series.csv")
    (out_dir / "report.txt").write_text(report.to_text() + "\n", encoding="utf-8")
    _write_json(out_dir / "report.json", report.to_json_dict())
    return report.to_json_dict()


def cmd_check(cfg: RunConfig, out_dir: Path, n_points: int = 100) -> dict:
    """Sweep the profile and verify the control-design preconditions.

    At on-profile and randomly perturbed states this checks Hautus
    stabilizability of (A, B), detectability of (A, I5) and (A, Q^(1/2)),
    the CARE residual, and the mass-matrix condition number.
    """
    profile = _resolve_profile(cfg)
    p = cfg.leg_params()
    gains = cfg.gains()
    rng = np.random.default_rng(cfg.seed)

    evals, evecs = np.linalg.eigh(gains.Q)
    q_root = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T

    times = np.linspace(profile.t[0], profile.t[-1], n_points)
    theta_d, omega_d, alpha_d = profile.sample(times)
    stab, det_full, det_qroot = [], [], []
    residuals, conds = [], []
    for i in range(n_points):
        if i % 2 == 0:
            x = ErrorState(np.zeros(2), np.zeros(2), 1.0)
        else:
            x = ErrorState(
                rng.uniform(-0.2, 0.2, 2), rng.uniform(-0.5, 0.5, 2), rng.uniform(0.1, 1.0)
            )
        desired = DesiredSample(theta_d[i], omega_d[i], alpha_d[i])
        model = build_sdc(p, x, desired, gains)
        stab.append(hautus_stabilizable(model.A, model.B))
        det_full.append(hautus_detectable(model.A, np.eye(5)))
        det_qroot.append(hautus_detectable(model.A, q_root))
        sol = solve_care(CareProblem(model.A, model.B, gains.Q, gains.R))
        residuals.append(sol.residual_norm)
        conds.append(float(np.linalg.cond(mass_matrix(p, x.x_theta + theta_d[i]))))

    diagnostics = {
        "config_hash": cfg.config_hash(),
        "profile_source": profile.source,
        "n_points": n_points,
        "stabilizable_all": bool(all(stab)),
        "detectable_full_state_all": bool(all(det_full)),
        "detectable_qroot_all": bool(all(det_qroot)),
        "max_care_residual": float(np.max(residuals)),
        "max_mass_condition": float(np.max(conds)),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "check.json", diagnostics)
    if not diagnostics["stabilizable_all"]:
        raise errors.NotStabilizable("stabilizability check failed at a swept SDC point")
    return diagnostics


def cmd_gen_profile(cfg: RunConfig, args: argparse.Namespace) -> dict:
    if args.motion == "walk":
        profile = synthetic_walk(dt=cfg.dt, cycles=args.cycles)
    elif args.motion == "squat":
        profile = synthetic_squat(dt=cfg.dt, duration=args.duration)
    else:
        raise errors.ValidationError(f"motion must be 'walk' or 'squat', got {args.motion!r}")
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_profile(profile, out)
    return {"written": str(out), "n_samples": profile.n_samples, "duration": profile.duration}


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != n:
        raise errors.ValidationError(f"{what} needs {n} comma-separated values, got {text!r}")
    try:
        return [float(v) for v in parts]
    except ValueError as exc:
        raise errors.ValidationError(f"{what}: {exc}") from exc


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--profile", help="gait CSV path, or synthetic:walk / synthetic:squat")
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--dt", type=float, help="simulation step (s)")
    sub.add_argument("--eta", type=float, help="auxiliary-state decay rate")
    sub.add_argument("--seed", type=int, help="RNG seed for the optimizer")
    sub.add_argument("--out-dir", help="output directory")
    sub.add_argument("--care-every", type=int, help="re-solve the CARE every N steps")
    sub.add_argument("--bounds", help="w_min,w_max,a_min,a_max for plan parameters")
    sub.add_argument("--reference", choices=["sdre", "human"], help="torque reference source")
    sub.add_argument("--curvature-mode", choices=["accel", "graph"], help="node trigger signal")
    sub.add_argument("--leg-side", choices=["left", "right"], help="leg column set in CSVs")
    sub.add_argument("--initial-error", help="dtheta1,dtheta2,domega1,domega2 start offset")
    sub.add_argument("--starts", type=int, help="optimizer multi-start count")
    sub.add_argument("--max-evals", type=int, help="optimizer evaluation budget per run")
    sub.add_argument("--min-separation", type=float, help="minimum node spacing (s)")
    sub.add_argument("--prominence", type=float, help="node peak-prominence threshold")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        "profile": "profile", "dt": "dt", "eta": "eta", "seed": "seed",
        "out_dir": "out_dir", "care_every": "care_every", "reference": "reference",
        "curvature_mode": "curvature_mode", "leg_side": "leg_side", "starts": "starts",
        "max_evals": "max_evals", "min_separation": "min_separation",
        "prominence": "prominence",
    }
    for arg_name, cfg_name in overrides.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(cfg, cfg_name, value)
    if getattr(args, "bounds", None):
        cfg.w_min, cfg.w_max, cfg.a_min, cfg.a_max = _parse_floats(args.bounds, 4, "--bounds")
    if getattr(args, "initial_error", None):
        cfg.initial_error = _parse_floats(args.initial_error, 4, "--initial-error")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitrep",
        description="Gait replication on a two-link leg: SDRE tracking and velocity-plan fitting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("simulate", "run SDRE closed-loop tracking of a profile"),
        ("parameterize", "fit a piecewise-linear velocity plan to the reference torque"),
        ("compare", "run both methods and emit the RMSE report"),
        ("check", "sweep the profile and verify stabilizability/detectability"),
    ):
        s = sub.add_parser(name, help=helptext)
        _add_common_flags(s)
        s.set_defaults(command=name)

    g = sub.add_parser("gen-profile", help="write a bundled synthetic gait CSV")
    _add_common_flags(g)
    g.add_argument("--motion", choices=["walk", "squat"], required=True)
    g.add_argument("--cycles", type=float, default=1.0, help="walk cycles to generate")
    g.add_argument("--duration", type=float, default=2.0, help="squat duration (s)")
    g.add_argument("--out", required=True, help="output CSV path")
    g.set_defaults(command="gen-profile")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        out_dir = Path(cfg.out_dir)
        if args.command == "simulate":
            payload = cmd_simulate(cfg, out_dir)
        elif args.command == "parameterize":
            payload = cmd_parameterize(cfg, out_dir)
        elif args.command == "compare":
            payload = cmd_compare(cfg, out_dir)
        elif args.command == "check":
            payload = cmd_check(cfg, out_dir)
        elif args.command == "gen-profile":
            payload = cmd_gen_profile(cfg, args)
        else:  # pragma: no cover - argparse enforces the choices
            raise errors.ValidationError(f"unknown command {args.command!r}")
    except errors.GaitRepError as exc:
        code = EXIT_VALIDATION
        for exc_types, exit_code in _EXIT_CODES:
            if isinstance(exc, exc_types):
                code = exit_code
                break
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return code
    except FileNotFoundError as exc:
        json.dump({"error": "FileNotFoundError", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_VALIDATION
    json.dump(payload, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
