"""Free-energy description Psi(F, e0) from the internal energy e(F, d0).

For a prescribed electric field the conjugate displacement solves the
stationarity condition de/dd0 = e0 (Newton with line search; the dielectric
block d2e/dd0dd0 is positive definite for the in-range models, asserted at
runtime rather than assumed). The free energy and the moduli needed by the
finite element formulation follow from the solved point:

    Psi    = e - d0 . e0,
    P      = de/dF,
    d2_ee  = (d2e/dd0dd0)^-1          (dielectric tensor, dd0/de0),
    d2_Fe  = (d2e/dFdd0) d2_ee        (piezoelectric block, dP/de0),
    d2_FF  = d2e/dFdF - (d2e/dFdd0) d2_ee (d2e/dd0dF)   (dP/dF at fixed e0).
"""

from dataclasses import dataclass

import numpy as np

from .core import MaterialState
from .errors import LegendreFailure

__all__ = ["FreeEnergyOutput", "solve_d0", "free_energy"]

_TOL = 1e-12
_MAX_ITER = 50


@dataclass
class FreeEnergyOutput:
    psi: float
    P: np.ndarray
    d0: np.ndarray
    d2_ee: np.ndarray
    d2_Fe: np.ndarray
    d2_FF: np.ndarray


def solve_d0(model, F, e0, guess=None):
    """Solve de/dd0(F, d0) = e0 for d0 by a guarded Newton iteration."""
    return _solve_with_output(model, F, e0, guess)[0]


def _solve_with_output(model, F, e0, guess):
    e0 = np.asarray(e0, dtype=float)
    d0 = np.zeros(3) if guess is None else np.asarray(guess, dtype=float).copy()

    out = model.energy(MaterialState(F, d0), order=2)
    r = out.e0 - e0
    rnorm = np.linalg.norm(r)
    for _ in range(_MAX_ITER):
        if rnorm <= _TOL:
            return d0, out
        S = out.d2_d0d0
        try:
            step = -np.linalg.solve(S, r)
        except np.linalg.LinAlgError:
            raise LegendreFailure(
                "singular dielectric block in displacement solve",
                residual_norm=float(rnorm),
                singular=True,
            ) from None
        t = 1.0
        for _ in range(40):
            cand = model.energy(MaterialState(F, d0 + t * step), order=2)
            cnorm = np.linalg.norm(cand.e0 - e0)
            if cnorm < rnorm * (1.0 - 1e-4 * t) + 1e-15:
                break
            t *= 0.5
        else:
            raise LegendreFailure(
                f"line search stalled, |r| = {rnorm:g}", residual_norm=float(rnorm)
            )
        d0 = d0 + t * step
        out = cand
        r = out.e0 - e0
        rnorm = np.linalg.norm(r)
    if rnorm <= _TOL:
        return d0, out
    raise LegendreFailure(
        f"no convergence in {_MAX_ITER} iterations, |r| = {rnorm:g}",
        residual_norm=float(rnorm),
    )


def free_energy(model, F, e0, guess=None):
    """Legendre-transformed output at (F, e0); see module docstring for blocks."""
    d0, out = _solve_with_output(model, F, e0, guess)
    S = out.d2_d0d0
    # positive definiteness backs the stationarity-only infimum
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise LegendreFailure(
            "dielectric block not positive definite at the solved point", singular=True
        ) from None
    S_inv = np.linalg.inv(S)
    S_inv = 0.5 * (S_inv + S_inv.T)
    B = out.d2_Fd0
    d2_Fe = np.einsum("iIp,pk->iIk", B, S_inv)
    d2_FF = out.d2_FF - np.einsum("iIp,jJp->iIjJ", d2_Fe, B)
    return FreeEnergyOutput(
        psi=float(out.e - d0 @ e0),
        P=out.P,
        d0=d0,
        d2_ee=S_inv,
        d2_Fe=d2_Fe,
        d2_FF=d2_FF,
    )
