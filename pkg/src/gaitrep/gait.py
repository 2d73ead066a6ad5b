"""Gait profiles: ingestion, smoothing/differentiation, and node selection.

A profile is a time-sampled pair of joint angles (hip, knee) for one leg,
with velocity and acceleration arrays carried alongside.  Characteristic
nodes for piecewise-linear velocity commands are picked at the local
maxima of |acceleration|, where a joint starts, stops, or reverses.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import find_peaks

from .errors import OutOfDomain, ParseError, TooFewSamples, ValidationError

__all__ = [
    "GaitProfile",
    "NodeSequence",
    "load_profile",
    "save_profile",
    "differentiate",
    "select_nodes",
    "resample",
    "synthetic_walk",
    "synthetic_squat",
]


def _fd_derivative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Centered differences inside, second-order one-sided at the edges
    # (falls back to first order when only two samples exist).
    edge = 2 if len(t) >= 3 else 1
    return np.gradient(y, t, axis=0, edge_order=edge)


def _moving_average(y: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return y
    if window % 2 == 0:
        raise ValidationError(f"smoothing window must be odd, got {window}")
    half = window // 2
    padded = np.pad(y, ((half, half), (0, 0)), mode="edge")
    kernel = np.ones(window) / window
    out = np.empty_like(y)
    for j in range(y.shape[1]):
        out[:, j] = np.convolve(padded[:, j], kernel, mode="valid")
    return out


@dataclass(frozen=True)
class GaitProfile:
    """Sampled joint-angle trajectory for one leg (hip, knee).

    t is strictly increasing and starts at 0; theta, theta_dot and
    theta_ddot are (N, 2) arrays in rad, rad/s, rad/s^2.
    """

    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    source: str = "unknown"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        arrays = {}
        for name in ("theta", "theta_dot", "theta_ddot"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape != (t.size, 2):
                raise ValidationError(f"{name} must be ({t.size}, 2), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
            arrays[name] = arr
        if t.size < 2:
            raise ValidationError("profile needs at least 2 samples")
        if not np.all(np.isfinite(t)):
            raise ValidationError("time samples must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise ValidationError("time samples must be strictly increasing")
        if t[-1] - t[0] <= 0.0:
            raise ValidationError("profile duration must be positive")
        object.__setattr__(self, "t", t)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def n_samples(self) -> int:
        return int(self.t.size)

    @classmethod
    def from_angles(cls, t, theta, source: str = "unknown") -> "GaitProfile":
        """Build a profile from angles only, deriving velocities and
        accelerations by finite differences."""
        t = np.asarray(t, dtype=float).reshape(-1)
        theta = np.asarray(theta, dtype=float)
        if t.size < 2 or np.any(np.diff(t) <= 0.0):
            raise ValidationError("time samples must be strictly increasing (>= 2 samples)")
        dot = _fd_derivative(t, theta)
        ddot = _fd_derivative(t, dot)
        return cls(t=t, theta=theta, theta_dot=dot, theta_ddot=ddot, source=source)

    def sample(self, times) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Linearly interpolate (theta, theta_dot, theta_ddot) at the query
        times, which must lie within the profile horizon."""
        tq = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(tq < self.t[0] - 1e-9) or np.any(tq > self.t[-1] + 1e-9):
            raise OutOfDomain(
                f"query times outside [{self.t[0]}, {self.t[-1]}]"
            )
        tq = np.clip(tq, self.t[0], self.t[-1])
        out = []
        for arr in (self.theta, self.theta_dot, self.theta_ddot):
            out.append(np.column_stack([np.interp(tq, self.t, arr[:, j]) for j in range(2)]))
        return out[0], out[1], out[2]


@dataclass(frozen=True)
class NodeSequence:
    """Strictly increasing command times covering the whole horizon."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if times.size < 2:
            raise ValidationError("need at least the two endpoint nodes")
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("node times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @property
    def n_segments(self) -> int:
        return int(self.times.size - 1)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


_HEADERS = {
    ("t", "hip", "knee"): {"left": (1, 2), "right": (1, 2)},
    ("t", "hip_l", "knee_l", "hip_r", "knee_r"): {"left": (1, 2), "right": (3, 4)},
}


def load_profile(path, leg: str = "left", smooth_window: int = 1) -> GaitProfile:
    """Read a gait CSV (angles in radians) and derive velocity/acceleration.

    Accepted headers: ``t,hip,knee`` for a single leg or
    ``t,hip_l,knee_l,hip_r,knee_r`` for both; ``leg`` picks the side in the
    two-leg format.  Lines starting with ``#`` are comments.
    """
    if leg not in ("left", "right"):
        raise ValidationError(f"leg must be 'left' or 'right', got {leg!r}")
    rows = []
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = tuple(col.strip().lower() for col in line.split(","))
                if header not in _HEADERS:
                    raise ParseError(f"{path}: unrecognized header {','.join(header)!r}")
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(parts)}"
                )
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if header is None:
        raise ParseError(f"{path}: no header line found")
    if len(rows) < 2:
        raise ValidationError(f"{path}: profile needs at least 2 samples (zero duration)")
    data = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{path}: non-finite values in profile")
    t = data[:, 0]
    if np.any(np.diff(t) <= 0.0):
        raise ValidationError(f"{path}: time column must be strictly increasing")
    cols = _HEADERS[header][leg]
    theta = data[:, list(cols)]
    if np.any(np.abs(theta) >= np.pi):
        raise ValidationError(f"{path}: |angle| >= pi; expected radians within (-pi, pi)")
    theta = _moving_average(theta, smooth_window)
    t = t - t[0]
    return GaitProfile.from_angles(t, theta, source=str(path))


def save_profile(profile: GaitProfile, path) -> None:
    """Write a profile as a ``t,hip,knee`` CSV (17 significant digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,hip,knee\n")
        for i in range(profile.n_samples):
            fh.write(
                f"{profile.t[i]:.17g},{profile.theta[i, 0]:.17g},{profile.theta[i, 1]:.17g}\n"
            )


def differentiate(profile: GaitProfile, smooth_window: int = 1) -> GaitProfile:
    """Recompute theta_dot/theta_ddot from theta by finite differences.

    Centered second-order differences inside, one-sided second-order at the
    boundaries; an optional odd moving-average window smooths the angles
    first.  Requires at least 5 samples.
    """
    if profile.n_samples < 5:
        raise TooFewSamples(f"need >= 5 samples, got {profile.n_samples}")
    theta = _moving_average(profile.theta, smooth_window)
    dot = _fd_derivative(profile.t, theta)
    ddot = _fd_derivative(profile.t, dot)
    return replace(profile, theta=theta, theta_dot=dot, theta_ddot=ddot)


def resample(profile: GaitProfile, dt: float) -> GaitProfile:
    """Linearly interpolate angles onto a uniform dt grid and recompute the
    derivatives by finite differences."""
    if not dt > 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    n = int(round(profile.duration / dt)) + 1
    t_new = profile.t[0] + np.arange(n) * dt
    t_new = t_new[t_new <= profile.t[-1] + 1e-12]
    theta = np.column_stack(
        [np.interp(t_new, profile.t, profile.theta[:, j]) for j in range(2)]
    )
    return GaitProfile.from_angles(t_new - t_new[0], theta, source=profile.source)


def _node_signal(profile: GaitProfile, curvature_mode: str) -> np.ndarray:
    if curvature_mode == "accel":
        return np.abs(profile.theta_ddot)
    if curvature_mode == "graph":
        # Curvature of the (t, theta) graph per joint.
        return np.abs(profile.theta_ddot) / (1.0 + profile.theta_dot**2) ** 1.5
    raise ValidationError(f"curvature_mode must be 'accel' or 'graph', got {curvature_mode!r}")


def select_nodes(
    profile: GaitProfile,
    min_separation: float = 0.05,
    prominence: float | None = None,
    curvature_mode: str = "accel",
) -> NodeSequence:
    """Pick command times at the prominent local maxima of |acceleration|.

    Candidate peaks from both joints are merged, then thinned greedily by
    peak height so that accepted nodes (and the pinned endpoints 0 and T)
    stay at least min_separation apart.  Degenerate profiles yield just the
    endpoints.
    """
    if min_separation < 0.0:
        raise ValidationError(f"min_separation must be >= 0, got {min_separation}")
    signal = _node_signal(profile, curvature_mode)
    if prominence is None:
        prominence = 0.1 * float(np.max(signal)) if np.max(signal) > 0.0 else np.inf

    candidates: list[tuple[float, float]] = []
    for j in range(2):
        idx, props = find_peaks(signal[:, j], prominence=prominence)
        for i, prom in zip(idx, props["prominences"]):
            candidates.append((float(signal[i, j]), float(profile.t[i])))

    t0, t_end = float(profile.t[0]), float(profile.t[-1])
    accepted = [t0, t_end]
    for _, t_peak in sorted(candidates, key=lambda c: -c[0]):
        if all(abs(t_peak - s) >= min_separation for s in accepted):
            accepted.append(t_peak)
    return NodeSequence(np.array(sorted(accepted)))


def synthetic_walk(
    dt: float = 1e-3,
    cycles: float = 1.0,
    period: float = 1.2,
    hip_amp: float = 0.3,
    knee_amp: float = 0.5,
    knee_phase: float = 0.4,
) -> GaitProfile:
    """Sinusoidal walking-like profile with exact analytic derivatives.

    hip(t)  = hip_amp  * sin(2 pi t / period)
    knee(t) = knee_amp * sin(2 pi t / period + knee_phase)
    """
    if not dt > 0.0 or not cycles > 0.0:
        raise ValidationError("dt and cycles must be > 0")
    duration = cycles * period
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    w = 2.0 * np.pi / period
    theta = np.column_stack([hip_amp * np.sin(w * t), knee_amp * np.sin(w * t + knee_phase)])
    dot = np.column_stack(
        [hip_amp * w * np.cos(w * t), knee_amp * w * np.cos(w * t + knee_phase)]
    )
    ddot = -(w**2) * theta
    return GaitProfile(t=t, theta=theta, theta_dot=dot, theta_ddot=ddot, source="synthetic-walk")


def synthetic_squat(
    dt: float = 1e-3,
    duration: float = 2.0,
    hip_depth: float = -0.6,
    knee_depth: float = 1.0,
) -> GaitProfile:
    """Squat-like descend-and-rise half cycle with exact analytic derivatives.

    Both joints follow depth * sin(pi t / T)^2, which starts and ends at
    rest (zero velocity at t = 0 and t = T).
    """
    if not dt > 0.0 or not duration > 0.0:
        raise ValidationError("dt and duration must be > 0")
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    w = np.pi / duration
    s, c = np.sin(w * t), np.cos(w * t)
    depths = np.array([hip_depth, knee_depth])
    theta = np.outer(s**2, depths)
    dot = np.outer(2.0 * w * s * c, depths)
    ddot = np.outer(2.0 * w**2 * (c**2 - s**2), depths)
    return GaitProfile(t=t, theta=theta, theta_dot=dot, theta_ddot=ddot, source="synthetic-squat")
