"""Shared constitutive-layer types and the invariant-space chain rule.

Every model in the package evaluates an internal energy density e(F, d0)
and returns its first derivatives P = de/dF, e0 = de/dd0 plus, on request,
the three second-derivative blocks. Models defined through a scalar
potential of the invariants get their tensor derivatives assembled here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDeformation
from .invariants import compute_invariants
from .tensors import as_tensor2, as_vector3, det3

__all__ = ["MaterialState", "EnergyOutput", "EnergyModel", "InvariantEnergyModel"]


@dataclass
class MaterialState:
    """Input point of a constitutive evaluation: (F, d0) with det F > 0."""

    F: np.ndarray
    d0: np.ndarray

    def __post_init__(self):
        self.F = as_tensor2(self.F)
        self.d0 = as_vector3(self.d0)
        if self.F.ndim != 2 or self.d0.ndim != 1:
            raise ValueError("MaterialState holds a single (3,3) F and (3,) d0")
        J = det3(self.F)
        if J <= 0.0:
            raise InvalidDeformation(f"det F must be positive, got {J:g}")


@dataclass
class EnergyOutput:
    """Energy density with derivatives.

    P and e0 are the first derivatives w.r.t. F and d0. The second
    derivative blocks are d2_FF (3,3,3,3), d2_Fd0 (3,3,3) with the trailing
    axis the d0 index, and d2_d0d0 (3,3); they are None when the evaluation
    was requested with order < 2. ``info`` carries model-specific metadata
    (for example the laminate solver's inner-state diagnostics).
    """

    e: float
    P: np.ndarray = None
    e0: np.ndarray = None
    d2_FF: np.ndarray = None
    d2_Fd0: np.ndarray = None
    d2_d0d0: np.ndarray = None
    info: dict = None


class EnergyModel:
    """Base class: constitutive models map MaterialState to EnergyOutput."""

    def energy(self, state, order=2):
        raise NotImplementedError


class InvariantEnergyModel(EnergyModel):
    """Model given by a scalar potential of an invariant set.

    Subclasses provide ``symmetry``, ``mode`` and ``potential_terms(values,
    order)`` returning (value, grad, hess) in invariant space; hess may be
    None for order < 2.
    """

    symmetry = None
    mode = None

    def potential_terms(self, values, order):
        raise NotImplementedError

    def energy(self, state, order=2):
        inv = compute_invariants(state.F, state.d0, self.symmetry, self.mode, order=max(order, 0))
        value, grad, hess = self.potential_terms(inv.values, order)
        return assemble_energy(inv, value, grad, hess, order)


def assemble_energy(inv, value, grad, hess, order=2):
    """Chain rule from invariant space to (F, d0) derivatives."""
    out = EnergyOutput(e=float(value))
    if order < 1:
        return out
    out.P = np.einsum("n,niI->iI", grad, inv.dI_dF)
    out.e0 = np.einsum("n,nk->k", grad, inv.dI_dd0)
    if order < 2:
        return out
    out.d2_FF = np.einsum("nm,niI,mkL->iIkL", hess, inv.dI_dF, inv.dI_dF) + np.einsum(
        "n,niIkL->iIkL", grad, inv.d2I_dFdF
    )
    out.d2_Fd0 = np.einsum("nm,niI,mk->iIk", hess, inv.dI_dF, inv.dI_dd0) + np.einsum(
        "n,niIk->iIk", grad, inv.d2I_dFdd0
    )
    out.d2_d0d0 = np.einsum("nm,nk,ml->kl", hess, inv.dI_dd0, inv.dI_dd0) + np.einsum(
        "n,nkl->kl", grad, inv.d2I_dd0dd0
    )
    return out
