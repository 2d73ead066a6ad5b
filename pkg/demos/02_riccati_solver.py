"""Riccati machinery on its own.

Solves textbook CARE instances with known closed forms, checks the Hautus
rank conditions that guarantee a stabilizing solution, and shows what the
solver reports on an ill-posed pair.
"""

import numpy as np

from gaitrep import (
    CareProblem,
    NotStabilizable,
    hautus_detectable,
    hautus_stabilizable,
    solve_care,
)

# Scalar instance with a = 1: the positive root of 2P - P^2 + 1 = 0.
sol = solve_care(CareProblem([[1.0]], [[1.0]], [[1.0]], [[1.0]]))
print(f"scalar CARE: P = {sol.P[0, 0]:.12f} (closed form {1 + np.sqrt(2):.12f})")

# Double integrator: P = [[sqrt(3), 1], [1, sqrt(3)]].
sol = solve_care(CareProblem([[0, 1], [0, 0]], [[0], [1]], np.eye(2), [[1.0]]))
print("double integrator P =\n", sol.P)
print("residual:", sol.residual_norm, " closed-loop eigs:", sol.closed_loop_eigs)

# Hautus checks: a stable pair is vacuously stabilizable even with B = 0;
# an unstable mode that the input cannot reach is not.
print("stable A, B = 0:", hautus_stabilizable(-np.eye(2), np.zeros((2, 1))))
A_bad = np.array([[1.0, 0.0], [0.0, -1.0]])
B_bad = np.array([[0.0], [1.0]])
print("unreachable unstable mode:", hautus_stabilizable(A_bad, B_bad))
print("full-state observation is always detectable:", hautus_detectable(A_bad, np.eye(2)))

# The solver refuses rather than returning a non-stabilizing P.
try:
    solve_care(CareProblem(A_bad, B_bad, np.eye(2), [[1.0]]))
except NotStabilizable as exc:
    print("solver verdict on the ill-posed pair:", exc)

# A batch of random well-posed problems: residuals sit at solver precision.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(50):
    n = int(rng.integers(2, 7))
    A = rng.standard_normal((n, n))
    A -= (np.max(np.linalg.eigvals(A).real) - 0.5) * np.eye(n)
    B = rng.standard_normal((n, 2))
    C = rng.standard_normal((n, n))
    if not hautus_stabilizable(A, B):
        continue
    s = solve_care(CareProblem(A, B, C.T @ C + 1e-3 * np.eye(n), np.eye(2)))
    worst = max(worst, s.residual_norm)
print(f"worst residual over the random batch: {worst:.2e}")
