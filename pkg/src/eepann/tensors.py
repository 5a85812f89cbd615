"""Fixed-size 3x3 tensor kernels for the constitutive layer.

Everything here works on plain float64 numpy arrays with arbitrary leading
batch axes; the tensor indices are always the trailing axes. Determinant,
cofactor, and inverse use closed 3x3 formulas (no general linear algebra),
so the cofactor stays well defined near small determinants, which matters
during line searches.
"""

import numpy as np

from .errors import InvalidDeformation

__all__ = [
    "LEVI_CIVITA",
    "as_tensor2",
    "as_vector3",
    "det3",
    "cof3",
    "inv3",
    "kinematic_triplet",
    "spatial_push",
    "dcof_dF",
]


def _levi_civita():
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    return eps


LEVI_CIVITA = _levi_civita()
LEVI_CIVITA.setflags(write=False)


def as_tensor2(a):
    """Validate and return a float64 (..., 3, 3) array. Rejects NaN/Inf."""
    a = np.asarray(a, dtype=float)
    if a.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing shape (3, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("tensor entries must be finite")
    return a


def as_vector3(a):
    """Validate and return a float64 (..., 3) array. Rejects NaN/Inf."""
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (3,):
        raise ValueError(f"expected trailing shape (3,), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must be finite")
    return a


def det3(F):
    """Determinant via the explicit 3x3 expansion."""
    F = np.asarray(F, dtype=float)
    return (
        F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
        - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
        + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0])
    )


def cof3(F):
    """Cofactor of F through the cross-product formula 0.5*(F x F).

    Equivalent to columns [f2 x f3, f3 x f1, f1 x f2] of F = [f1 f2 f3],
    hence never requires an inverse.
    """
    F = np.asarray(F, dtype=float)
    c0 = np.cross(F[..., :, 1], F[..., :, 2], axis=-1)
    c1 = np.cross(F[..., :, 2], F[..., :, 0], axis=-1)
    c2 = np.cross(F[..., :, 0], F[..., :, 1], axis=-1)
    return np.stack((c0, c1, c2), axis=-1)


def inv3(F):
    """Inverse via adjugate over determinant."""
    J = det3(F)
    return np.swapaxes(cof3(F), -1, -2) / J[..., None, None]


def kinematic_triplet(F):
    """Return (H, J) with H = cof F and J = det F.

    Raises InvalidDeformation when det F <= 0 anywhere in the batch.
    """
    F = np.asarray(F, dtype=float)
    J = det3(F)
    if np.any(J <= 0.0):
        raise InvalidDeformation(f"det F must be positive, got min {np.min(J):g}")
    return cof3(F), J


def spatial_push(F, d0):
    """Push the material electric displacement forward: d = F d0."""
    return np.einsum("...iI,...I->...i", np.asarray(F, dtype=float), np.asarray(d0, dtype=float))


def dcof_dF(F):
    """Derivative of the cofactor, d(cof F)_iI / dF_pP = eps_ipk eps_IPK F_kK."""
    return np.einsum("ipk,IPK,...kK->...iIpP", LEVI_CIVITA, LEVI_CIVITA, np.asarray(F, dtype=float))
