"""Electromechanical invariants with analytic first and second derivatives.

The isotropic set uses

    I1 = |F|^2,  I2 = |H|^2,  J = det F,  I4 = |d0|^2,  I5 = |F d0|^2,
    I6 = I5 / J,

and, when the potential is restricted to a convex non-decreasing form, the
negated volume I7 = -J is appended so decreasing behaviour in J remains
representable. Transverse isotropy about a unit direction N enters through
the structural tensor G = N (x) N with

    J1 = |F G|^2,  J2 = |H G|^2,  J3 = tr((d0 (x) d0) G),

plus, again only in the restricted mode, the complementary combinations
J1* = I1 - J1, J2* = I2 - J2, J3* = I4 - J3, which are convex in the
corresponding polyconvexity arguments.

Ordering is fixed: isotropic block first, then the structural-tensor block,
then the complementary block. All derivative formulas below are certified
against finite differences in the test suite; that oracle is authoritative.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, InvalidDeformation
from .tensors import LEVI_CIVITA, as_vector3, cof3, dcof_dF, det3

__all__ = [
    "Isotropic",
    "TransverselyIsotropic",
    "ConvexityMode",
    "InvariantSet",
    "invariant_count",
    "ordering_tag",
    "compute_invariants",
    "reference_invariants",
]

_EYE = np.eye(3)


class Isotropic:
    """Full orthogonal symmetry group."""

    tag = "isotropic"

    def __repr__(self):
        return "Isotropic()"

    def __eq__(self, other):
        return isinstance(other, Isotropic)

    def __hash__(self):
        return hash("Isotropic")


class TransverselyIsotropic:
    """Rotations about a preferred unit direction N."""

    tag = "transversely_isotropic"

    def __init__(self, normal):
        normal = as_vector3(normal)
        nrm = float(np.linalg.norm(normal))
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError(f"preferred direction must be a unit vector, |N| = {nrm:.15g}")
        self.normal = normal
        self.structural = np.outer(normal, normal)

    def __repr__(self):
        return f"TransverselyIsotropic(normal={self.normal.tolist()})"

    def __eq__(self, other):
        return isinstance(other, TransverselyIsotropic) and np.array_equal(self.normal, other.normal)

    def __hash__(self):
        return hash(("TransverselyIsotropic", self.normal.tobytes()))


class ConvexityMode(Enum):
    POLYCONVEX = "polyconvex"
    UNCONSTRAINED = "unconstrained"


def invariant_count(sym, mode):
    """Number of invariants for a (symmetry, mode) pair: 6, 7, 9, or 13."""
    n = 7 if mode is ConvexityMode.POLYCONVEX else 6
    if isinstance(sym, TransverselyIsotropic):
        n += 6 if mode is ConvexityMode.POLYCONVEX else 3
    return n


def ordering_tag(sym, mode):
    """Stable identifier of the invariant ordering, stored in model files."""
    s = "iso" if isinstance(sym, Isotropic) else "ti"
    return f"{s}-{mode.value}-v1"


@dataclass
class InvariantSet:
    """Invariant values with derivative blocks w.r.t. F and d0.

    Shapes: values (n,), dI_dF (n,3,3), dI_dd0 (n,3), d2I_dFdF (n,3,3,3,3),
    d2I_dFdd0 (n,3,3,3) with the trailing axis the d0 index, d2I_dd0dd0
    (n,3,3). Second-order blocks are None when computed with order < 2.
    """

    values: np.ndarray
    dI_dF: np.ndarray
    dI_dd0: np.ndarray
    d2I_dFdF: np.ndarray
    d2I_dFdd0: np.ndarray
    d2I_dd0dd0: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]


def _iso_blocks(F, d0, polyconvex, order):
    """Isotropic invariant stack; see module docstring for the ordering."""
    J = det3(F)
    if J <= 0.0:
        raise InvalidDeformation(f"det F must be positive, got {J:g}")
    H = cof3(F)
    C = F.T @ F
    d = F @ d0

    I1 = float(np.sum(F * F))
    I2 = float(np.sum(H * H))
    I4 = float(d0 @ d0)
    I5 = float(d @ d)
    I6 = I5 / J

    n = 7 if polyconvex else 6
    vals = np.array([I1, I2, J, I4, I5, I6] + ([-J] if polyconvex else []))

    dF = np.zeros((n, 3, 3))
    dd0 = np.zeros((n, 3))

    dI5_dF = 2.0 * np.outer(d, d0)
    dI5_dd0 = 2.0 * C @ d0

    dF[0] = 2.0 * F
    dF[1] = 2.0 * (I1 * F - F @ C)
    dF[2] = H
    dF[4] = dI5_dF
    dF[5] = dI5_dF / J - (I5 / J**2) * H
    dd0[3] = 2.0 * d0
    dd0[4] = dI5_dd0
    dd0[5] = dI5_dd0 / J
    if polyconvex:
        dF[6] = -H

    if order < 2:
        return vals, dF, dd0, None, None, None

    d2FF = np.zeros((n, 3, 3, 3, 3))
    d2Fd0 = np.zeros((n, 3, 3, 3))
    d2d0 = np.zeros((n, 3, 3))

    DH = dcof_dF(F)
    B = F @ F.T

    d2FF[0] = 2.0 * np.einsum("ik,IL->iIkL", _EYE, _EYE)
    d2FF[1] = 2.0 * (
        2.0 * np.einsum("kL,iI->iIkL", F, F)
        + I1 * np.einsum("ik,IL->iIkL", _EYE, _EYE)
        - np.einsum("ik,LI->iIkL", _EYE, C)
        - np.einsum("iL,kI->iIkL", F, F)
        - np.einsum("ik,IL->iIkL", B, _EYE)
    )
    d2FF[2] = DH

    d2I5_FF = 2.0 * np.einsum("ik,L,I->iIkL", _EYE, d0, d0)
    d2I5_Fd0 = 2.0 * (np.einsum("ik,I->iIk", F, d0) + np.einsum("i,Ik->iIk", d, _EYE))
    d2FF[4] = d2I5_FF
    d2Fd0[4] = d2I5_Fd0
    d2d0[3] = 2.0 * _EYE
    d2d0[4] = 2.0 * C

    d2FF[5] = (
        d2I5_FF / J
        - (np.einsum("iI,kL->iIkL", dI5_dF, H) + np.einsum("iI,kL->iIkL", H, dI5_dF)) / J**2
        + (2.0 * I5 / J**3) * np.einsum("iI,kL->iIkL", H, H)
        - (I5 / J**2) * DH
    )
    d2Fd0[5] = d2I5_Fd0 / J - np.einsum("iI,k->iIk", H, dI5_dd0) / J**2
    d2d0[5] = 2.0 * C / J

    if polyconvex:
        d2FF[6] = -DH

    return vals, dF, dd0, d2FF, d2Fd0, d2d0


def _ti_blocks(F, d0, G, order):
    """Structural-tensor invariant stack (J1, J2, J3)."""
    H = cof3(F)
    HG = H @ G
    FG = F @ G
    Gd0 = G @ d0

    J1 = float(np.sum(FG * FG))
    J2 = float(np.sum(HG * HG))
    J3 = float(d0 @ Gd0)
    vals = np.array([J1, J2, J3])

    dF = np.zeros((3, 3, 3))
    dd0 = np.zeros((3, 3))

    DH = dcof_dF(F)
    dF[0] = 2.0 * FG
    dF[1] = 2.0 * np.einsum("iI,iIpP->pP", HG, DH)
    dd0[2] = 2.0 * Gd0

    if order < 2:
        return vals, dF, dd0, None, None, None

    d2FF = np.zeros((3, 3, 3, 3, 3))
    d2Fd0 = np.zeros((3, 3, 3, 3))
    d2d0 = np.zeros((3, 3, 3))

    d2FF[0] = 2.0 * np.einsum("ik,LI->iIkL", _EYE, G)
    # d(HG)/dF = DH contracted with G on the material index of H
    DHG = np.einsum("iMpP,MI->iIpP", DH, G)
    d2FF[1] = 2.0 * (
        np.einsum("iIpP,iIqQ->pPqQ", DH, DHG)
        + np.einsum("iI,ipq,IPQ->pPqQ", HG, LEVI_CIVITA, LEVI_CIVITA)
    )
    d2d0[2] = 2.0 * G

    return vals, dF, dd0, d2FF, d2Fd0, d2d0


def compute_invariants(F, d0, sym, mode, order=2):
    """Evaluate the invariant set for one material state.

    ``order`` selects how many derivative levels are populated (0, 1, or 2);
    blocks beyond the requested order are None.
    """
    F = np.asarray(F, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    poly = mode is ConvexityMode.POLYCONVEX

    vals, dF, dd0, d2FF, d2Fd0, d2d0 = _iso_blocks(F, d0, poly, order)

    if isinstance(sym, TransverselyIsotropic):
        G = sym.structural
        tvals, tdF, tdd0, td2FF, td2Fd0, td2d0 = _ti_blocks(F, d0, G, order)
        vals = np.concatenate([vals, tvals])
        dF = np.concatenate([dF, tdF])
        dd0 = np.concatenate([dd0, tdd0])
        if order >= 2:
            d2FF = np.concatenate([d2FF, td2FF])
            d2Fd0 = np.concatenate([d2Fd0, td2Fd0])
            d2d0 = np.concatenate([d2d0, td2d0])
        if poly:
            # complementary combinations J1* = I1 - J1, J2* = I2 - J2, J3* = I4 - J3
            svals = np.array([vals[0] - tvals[0], vals[1] - tvals[1], vals[3] - tvals[2]])
            sdF = np.stack([dF[0] - tdF[0], dF[1] - tdF[1], -tdF[2]])
            sdd0 = np.stack([-tdd0[0], -tdd0[1], dd0[3] - tdd0[2]])
            vals = np.concatenate([vals, svals])
            dF = np.concatenate([dF, sdF])
            dd0 = np.concatenate([dd0, sdd0])
            if order >= 2:
                sd2FF = np.stack([d2FF[0] - td2FF[0], d2FF[1] - td2FF[1], -td2FF[2]])
                sd2Fd0 = np.stack([-td2Fd0[0], -td2Fd0[1], -td2Fd0[2]])
                sd2d0 = np.stack([-td2d0[0], -td2d0[1], d2d0[3] - td2d0[2]])
                d2FF = np.concatenate([d2FF, sd2FF])
                d2Fd0 = np.concatenate([d2Fd0, sd2Fd0])
                d2d0 = np.concatenate([d2d0, sd2d0])
    elif not isinstance(sym, Isotropic):
        raise ConfigError(f"unknown symmetry class {sym!r}")

    if order < 1:
        dF = dd0 = None
    return InvariantSet(vals, dF, dd0, d2FF, d2Fd0, d2d0)


def reference_invariants(sym, mode):
    """Invariant values at the reference state F = I, d0 = 0."""
    return compute_invariants(np.eye(3), np.zeros(3), sym, mode, order=0).values
