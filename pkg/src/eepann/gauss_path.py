"""Incompressible actuation path at a single material point.

The film is loaded by a prescribed electric field magnitude e0 along the
third axis with F = diag(F11, 1, F33). The augmented energy
e(F, d0) + p (J - 1) - e0 . d0 is made stationary in the six unknowns
(F11, F33, p, d0): the two diagonal stress components of the augmented
stress vanish, J = F11 F33 = 1 holds through the multiplier p, and
de/dd0 = e0. Continuation in e0 uses warm starts and bisects the step on
Newton failure.
"""

from dataclasses import dataclass

import numpy as np

from .core import MaterialState
from .errors import PathFailure

__all__ = ["PathState", "path_residuals", "solve_path_state", "trace_path", "write_path"]

_TOL = 1e-10
_MAX_ITER = 40
_MIN_STEP = 1e-6


@dataclass
class PathState:
    F11: float
    F33: float
    p: float
    d0: np.ndarray
    e0_mag: float

    @property
    def F(self):
        return np.diag([self.F11, 1.0, self.F33])

    def vector(self):
        return np.concatenate([[self.F11, self.F33, self.p], self.d0])

    @classmethod
    def from_vector(cls, v, e0_mag):
        return cls(float(v[0]), float(v[1]), float(v[2]), v[3:6].copy(), e0_mag)


def path_residuals(model, s):
    """Residual 6-vector and 6x6 Jacobian of the stationarity conditions.

    Unknown ordering (F11, F33, p, d01, d02, d03). The multiplier enters the
    stress residuals through p dJ/dF with dJ/dF = cof F, which for the
    diagonal parametrization is (F33, F11) on the active components.
    """
    F = s.F
    out = model.energy(MaterialState(F, s.d0), order=2)
    e0_vec = np.array([0.0, 0.0, s.e0_mag])

    R = np.empty(6)
    R[0] = out.P[0, 0] + s.p * s.F33
    R[1] = out.P[2, 2] + s.p * s.F11
    R[2] = s.F11 * s.F33 - 1.0
    R[3:] = out.e0 - e0_vec

    K = np.zeros((6, 6))
    A, B, S = out.d2_FF, out.d2_Fd0, out.d2_d0d0
    K[0, 0] = A[0, 0, 0, 0]
    K[0, 1] = A[0, 0, 2, 2] + s.p
    K[1, 0] = A[2, 2, 0, 0] + s.p
    K[1, 1] = A[2, 2, 2, 2]
    K[0, 2] = s.F33
    K[1, 2] = s.F11
    K[0, 3:] = B[0, 0, :]
    K[1, 3:] = B[2, 2, :]
    K[2, 0] = s.F33
    K[2, 1] = s.F11
    K[3:, 0] = B[0, 0, :]
    K[3:, 1] = B[2, 2, :]
    K[3:, 3:] = S
    return R, K


def solve_path_state(model, e0_mag, start):
    """Newton solve of one path point from a warm start; tolerance 1e-10."""
    s = PathState.from_vector(start.vector(), e0_mag)
    for _ in range(_MAX_ITER):
        R, K = path_residuals(model, s)
        if np.max(np.abs(R)) <= _TOL:
            return s
        step = np.linalg.solve(K, -R)
        v = s.vector() + step
        # keep the stretches positive through the update
        t = 1.0
        while v[0] <= 0.05 or v[1] <= 0.05:
            t *= 0.5
            v = s.vector() + t * step
            if t < 1e-6:
                break
        s = PathState.from_vector(v, e0_mag)
    R, _ = path_residuals(model, s)
    if np.max(np.abs(R)) <= _TOL:
        return s
    raise PathFailure(f"no convergence at e0 = {e0_mag:g}", last_e0=None)


def trace_path(model, e0_max, n_steps):
    """Trace the actuation curve on n_steps values from 0 to e0_max.

    Returns one converged PathState per value, starting from the reference
    state at e0 = 0. On failure the step to the next target is bisected
    down to a floor before giving up with the last converged magnitude.
    """
    if e0_max <= 0:
        raise ValueError("e0_max must be positive")
    targets = np.linspace(0.0, e0_max, n_steps)
    states = [PathState(1.0, 1.0, 0.0, np.zeros(3), 0.0)]
    current = states[0]
    for target in targets[1:]:
        while current.e0_mag < target:
            attempt = target
            while True:
                try:
                    current = solve_path_state(model, attempt, current)
                    break
                except (PathFailure, np.linalg.LinAlgError):
                    if attempt - current.e0_mag < _MIN_STEP:
                        raise PathFailure(
                            f"continuation stalled at e0 = {current.e0_mag:g}",
                            last_e0=current.e0_mag,
                        ) from None
                    attempt = 0.5 * (current.e0_mag + attempt)
        states.append(current)
    return states


def write_path(path, states):
    """Export (e0_mag, F11, F33, p, d0_z) rows as plain text."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# eepath-v1\n# e0_mag F11 F33 p d0_z\n")
        for s in states:
            row = (s.e0_mag, s.F11, s.F33, s.p, s.d0[2])
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
