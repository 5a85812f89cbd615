"""Shared test utilities: finite-difference oracles and random states.

Project-wide finite-difference standard: step 1e-5 on O(1) nondimensional
inputs, 4th-order central stencil, relative tolerance 1e-6 for first
derivatives and 1e-5 for second derivatives. Relative error is measured
against max(1, |reference|) so zero blocks do not blow up the ratio.
"""

import numpy as np

FD_STEP = 1e-5


def rel_err(approx, exact):
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(1.0, float(np.max(np.abs(exact))))
    return float(np.max(np.abs(approx - exact))) / scale


def central4(f, h=FD_STEP):
    """4th-order central difference of a callable of one scalar offset."""
    return (np.asarray(f(-2 * h)) - 8 * np.asarray(f(-h)) + 8 * np.asarray(f(h)) - np.asarray(f(2 * h))) / (12 * h)


def central2(f, h=FD_STEP):
    return (np.asarray(f(h)) - np.asarray(f(-h))) / (2 * h)


def fd_wrt_tensor(func, X, h=FD_STEP, order=4):
    """Derivative of func(X) (any array output) w.r.t. every entry of X.

    Returns an array of shape func-output-shape + X.shape.
    """
    stencil = central4 if order == 4 else central2
    base = np.asarray(func(X))
    out = np.empty(base.shape + X.shape)
    it = np.nditer(X, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index

        def shifted(t):
            Xp = X.copy()
            Xp[ix] += t
            return func(Xp)

        out[(Ellipsis,) + ix] = stencil(shifted, h)
    return out


def random_deformation(rng, spread=0.25):
    """Random F near identity with a safely positive determinant."""
    while True:
        F = np.eye(3) + spread * rng.standard_normal((3, 3))
        if np.linalg.det(F) > 0.35:
            return F


def random_rotation(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_about(axis, angle):
    """Rotation matrix about a unit axis by the given angle."""
    n = np.asarray(axis, dtype=float)
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.cos(angle) * np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * np.outer(n, n)


def check_energy_derivatives(model, F, d0, tol1=1e-6, tol2=1e-5, order=4):
    """FD-verify P, e0 and all three second blocks of a model at one state.

    Returns (first-derivative error, second-derivative error).
    """
    from eepann.core import MaterialState

    out = model.energy(MaterialState(F, d0), order=2)

    def e_of(Fv):
        return model.energy(MaterialState(Fv.reshape(3, 3), d0), order=0).e

    def e_of_d(dv):
        return model.energy(MaterialState(F, dv), order=0).e

    def Pe_of(Fv):
        o = model.energy(MaterialState(Fv.reshape(3, 3), d0), order=1)
        return np.concatenate([o.P.ravel(), o.e0])

    def Pe_of_d(dv):
        o = model.energy(MaterialState(F, dv), order=1)
        return np.concatenate([o.P.ravel(), o.e0])

    err1 = max(
        rel_err(fd_wrt_tensor(e_of, F.ravel().copy(), order=order).reshape(3, 3), out.P),
        rel_err(fd_wrt_tensor(e_of_d, d0.copy(), order=order), out.e0),
    )
    dF = fd_wrt_tensor(Pe_of, F.ravel().copy(), order=order)
    dd = fd_wrt_tensor(Pe_of_d, d0.copy(), order=order)
    err2 = max(
        rel_err(dF[:9].reshape(3, 3, 3, 3), out.d2_FF),
        rel_err(dF[9:].reshape(3, 3, 3), np.moveaxis(out.d2_Fd0, 2, 0)),
        rel_err(dd[:9].reshape(3, 3, 3), out.d2_Fd0),
        rel_err(dd[9:], out.d2_d0d0),
    )
    assert err1 <= tol1, f"first derivatives off by {err1:g}"
    assert err2 <= tol2, f"second derivatives off by {err2:g}"
    return err1, err2
