"""Continuous algebraic Riccati equation (CARE) solving and Hautus rank tests.

solve_care finds the unique stabilizing solution P of

    P A + A^T P - P B R^-1 B^T P + Q = 0

by extracting the stable invariant subspace of the 2n x 2n Hamiltonian
matrix with an ordered real Schur decomposition, then polishing P with a
few Newton-Kleinman (Lyapunov) iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur, solve_continuous_lyapunov

from .errors import NotStabilizable, NumericalFailure, ValidationError

__all__ = [
    "CareProblem",
    "CareSolution",
    "care_residual",
    "solve_care",
    "newton_kleinman",
    "hautus_stabilizable",
    "hautus_detectable",
]

#: Frobenius-norm residual every accepted CARE solution must satisfy.
RESIDUAL_TOL = 1e-8

#: Eigenvalues with real part above this count as unstable in the Hautus tests.
_UNSTABLE_RE = -1e-10


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class CareProblem:
    """One CARE instance: matrices A (n x n), B (n x m), Q >= 0, R > 0."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        Q = _as_matrix(self.Q, "Q")
        R = _as_matrix(self.R, "R")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValidationError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValidationError(f"B must have {n} rows, got {B.shape}")
        m = B.shape[1]
        if Q.shape != (n, n):
            raise ValidationError(f"Q must be {n}x{n}, got {Q.shape}")
        if R.shape != (m, m):
            raise ValidationError(f"R must be {m}x{m}, got {R.shape}")
        if not np.allclose(Q, Q.T, atol=1e-12, rtol=0.0):
            raise ValidationError("Q must be symmetric")
        if not np.allclose(R, R.T, atol=1e-12, rtol=0.0):
            raise ValidationError("R must be symmetric")
        if np.min(np.linalg.eigvalsh(Q)) < -1e-10:
            raise ValidationError("Q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(R)) <= 0.0:
            raise ValidationError("R must be positive definite")
        for name, arr in (("A", A), ("B", B), ("Q", Q), ("R", R)):
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class CareSolution:
    """Stabilizing CARE solution with its residual and closed-loop spectrum."""

    P: np.ndarray
    residual_norm: float
    closed_loop_eigs: np.ndarray = field(repr=False)

    def gain(self, problem: CareProblem) -> np.ndarray:
        """State-feedback gain K = R^-1 B^T P for u = -K x."""
        return np.linalg.solve(problem.R, problem.B.T @ self.P)


def care_residual(problem: CareProblem, P: np.ndarray) -> np.ndarray:
    """Residual matrix P A + A^T P - P B R^-1 B^T P + Q."""
    A, B, Q, R = problem.A, problem.B, problem.Q, problem.R
    BRB = B @ np.linalg.solve(R, B.T)
    return P @ A + A.T @ P - P @ BRB @ P + Q


def newton_kleinman(
    problem: CareProblem,
    P0: np.ndarray,
    max_iter: int = 30,
    tol: float = 1e-14,
) -> np.ndarray:
    """Refine a stabilizing guess P0 by Newton-Kleinman iteration.

    Each step solves the Lyapunov equation
    (A - B K)^T P + P (A - B K) = -(Q + K^T R K) with K = R^-1 B^T P0.
    For any stabilizing start the iterates converge quadratically to the
    unique stabilizing CARE solution.
    """
    A, B, Q, R = problem.A, problem.B, problem.Q, problem.R
    P = 0.5 * (np.asarray(P0, dtype=float) + np.asarray(P0, dtype=float).T)
    best = P
    best_res = np.linalg.norm(care_residual(problem, P))
    for _ in range(max_iter):
        K = np.linalg.solve(R, B.T @ P)
        Acl = A - B @ K
        if np.max(np.linalg.eigvals(Acl).real) >= 0.0:
            # Iterate left the stabilizing region; keep the best point seen.
            break
        P_next = solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K))
        P_next = 0.5 * (P_next + P_next.T)
        res = np.linalg.norm(care_residual(problem, P_next))
        if res < best_res:
            best, best_res = P_next, res
        if np.linalg.norm(P_next - P) <= tol * max(1.0, np.linalg.norm(P)):
            P = P_next
            break
        P = P_next
    return best


def solve_care(problem: CareProblem, refine: bool = True) -> CareSolution:
    """Solve the CARE for its unique stabilizing solution.

    Raises
    ------
    NotStabilizable
        The Hamiltonian has eigenvalues on the imaginary axis or the stable
        subspace does not define a solution (no stabilizing P exists).
    NumericalFailure
        The decomposition succeeded but the polished residual still exceeds
        the acceptance tolerance, or the closed loop is not Hurwitz.
    """
    A, B, Q, R = problem.A, problem.B, problem.Q, problem.R
    n = problem.n
    BRB = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -BRB], [-Q, -A.T]])

    try:
        _, Z, sdim = schur(H, output="real", sort="lhp")
    except Exception as exc:  # pragma: no cover - LAPACK failures are rare
        raise NumericalFailure(f"Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise NotStabilizable(
            f"Hamiltonian has {sdim} strictly stable eigenvalues, expected {n}; "
            "no stabilizing solution exists"
        )

    X1 = Z[:n, :n]
    X2 = Z[n:, :n]
    if np.linalg.cond(X1) > 1e13:
        raise NotStabilizable("stable subspace is not a graph over the state space")
    P = np.linalg.solve(X1.T, X2.T).T
    P = 0.5 * (P + P.T)

    if refine:
        P = newton_kleinman(problem, P)

    residual = float(np.linalg.norm(care_residual(problem, P)))
    eigs = np.linalg.eigvals(A - BRB @ P)
    if not np.all(np.isfinite(P)) or residual >= RESIDUAL_TOL:
        raise NumericalFailure(f"CARE residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
    if np.max(eigs.real) >= 0.0:
        raise NumericalFailure("closed-loop matrix is not Hurwitz after refinement")
    return CareSolution(P=P, residual_norm=residual, closed_loop_eigs=eigs)


def _rank(M: np.ndarray) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    threshold = max(M.shape) * np.finfo(float).eps * s[0]
    return int(np.count_nonzero(s > threshold))


def hautus_stabilizable(A, B) -> bool:
    """Hautus rank test: rank([A - lam*I, B]) = n for every eigenvalue with
    Re(lam) >= 0 (a -1e-10 tolerance catches marginal modes)."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ValidationError(f"inconsistent shapes A={A.shape}, B={B.shape}")
    eye = np.eye(n)
    for lam in np.linalg.eigvals(A):
        if lam.real < _UNSTABLE_RE:
            continue
        if _rank(np.hstack([A - lam * eye, B]).astype(complex)) < n:
            return False
    return True


def hautus_detectable(A, C) -> bool:
    """Detectability of (A, C) via duality: stabilizability of (A^T, C^T)."""
    A = _as_matrix(A, "A")
    C = _as_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        raise ValidationError(f"C must have {A.shape[0]} columns, got {C.shape}")
    return hautus_stabilizable(A.T, C.T)
