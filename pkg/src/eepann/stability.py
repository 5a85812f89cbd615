"""Rank-one convexity diagnostics and second-derivative moduli probes.

The electromechanical acoustic tensor condenses the electric jump
conditions out of the second-derivative blocks: with A = d2e/dFdF,
B = d2e/dFdd0, S = d2e/dd0dd0 and a unit direction V,

    Q(V)_ij = [A + B M(V) B^T]_iIjJ V_I V_J,
    M(V)    = (S^-1 V)(S^-1 V)^T / (V . S^-1 V) - S^-1.

Positive semi-definiteness of Q over all directions is equivalent to
rank-one convexity of the energy. Directions are parametrized spherically,
V = [cos(theta) sin(psi), sin(theta) sin(psi), cos(psi)].

The moduli probes contract the same three blocks against outer powers of
the direction vector: a shear-like scalar from A, a piezoelectric-like
scalar from B, and the dielectric block from S.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StabilityError

__all__ = [
    "SphericalGrid",
    "EllipticityResult",
    "spherical_directions",
    "acoustic_tensor",
    "acoustic_tensors_on_grid",
    "ellipticity_scan",
    "moduli_scan",
    "write_scan",
]

ELLIPTIC_TOL = 1e-9


@dataclass
class SphericalGrid:
    """Uniform (theta, psi) grid covering [0, 2pi] x [0, pi] inclusively."""

    n_theta: int = 64
    n_psi: int = 32

    @property
    def nodes(self):
        theta = np.linspace(0.0, 2.0 * np.pi, self.n_theta)
        psi = np.linspace(0.0, np.pi, self.n_psi)
        T, P = np.meshgrid(theta, psi, indexing="ij")
        return np.stack([T.ravel(), P.ravel()], axis=1)


def spherical_directions(nodes):
    theta, psi = nodes[:, 0], nodes[:, 1]
    sp = np.sin(psi)
    return np.stack([np.cos(theta) * sp, np.sin(theta) * sp, np.cos(psi)], axis=1)


@dataclass
class EllipticityResult:
    min_eigenvalue: float
    min_least_minor: float
    argmin_node: tuple  # (theta, psi) of the eigenvalue minimizer

    @property
    def elliptic(self):
        return self.min_eigenvalue >= -ELLIPTIC_TOL


def _condensed_blocks(output):
    A, B, S = output.d2_FF, output.d2_Fd0, output.d2_d0d0
    if A is None:
        raise StabilityError("acoustic tensor needs second derivatives (order=2)")
    try:
        S_inv = np.linalg.inv(S)
    except np.linalg.LinAlgError:
        raise StabilityError("singular dielectric block d2e/dd0dd0") from None
    return A, B, S_inv


def acoustic_tensors_on_grid(output, V):
    """Acoustic tensors for a batch of unit directions V (k, 3) -> (k, 3, 3)."""
    A, B, S_inv = _condensed_blocks(output)
    u = V @ S_inv.T  # (k, 3) = S^-1 V, S_inv symmetric up to rounding
    denom = np.einsum("ki,ki->k", V, u)
    if np.any(np.abs(denom) < 1e-14):
        raise StabilityError("direction with vanishing V . S^-1 V")
    Q = np.einsum("iIjJ,kI,kJ->kij", A, V, V)
    bV = np.einsum("iIp,kI->kip", B, V)  # (k, 3, 3), trailing axis is d0
    w = np.einsum("kip,kp->ki", bV, u)
    Q += np.einsum("ki,kj->kij", w, w) / denom[:, None, None]
    Q -= np.einsum("kip,pq,kjq->kij", bV, S_inv, bV)
    return 0.5 * (Q + np.swapaxes(Q, -1, -2))


def acoustic_tensor(model, state, V, output=None):
    """Symmetrized acoustic tensor of the model at one state and direction."""
    if output is None:
        output = model.energy(state, order=2)
    return acoustic_tensors_on_grid(output, np.asarray(V, dtype=float)[None, :])[0]


def _least_leading_minors(Q):
    m1 = Q[:, 0, 0]
    m2 = Q[:, 0, 0] * Q[:, 1, 1] - Q[:, 0, 1] * Q[:, 1, 0]
    m3 = np.linalg.det(Q)
    return np.minimum(np.minimum(m1, m2), m3)


def ellipticity_scan(model, state, grid=None, output=None):
    """Minimum acoustic eigenvalue and least leading principal minor over a grid.

    The elliptic verdict uses the eigenvalue criterion (order free and
    stronger than any single minor ordering). The grid argmin is polished
    by a local derivative-free minimization over (theta, psi), so the
    reported minimum is stable under grid refinement beyond the default
    resolution instead of quantized to the nodes.
    """
    from scipy.optimize import minimize

    grid = grid or SphericalGrid()
    nodes = grid.nodes
    V = spherical_directions(nodes)
    if output is None:
        output = model.energy(state, order=2)
    Q = acoustic_tensors_on_grid(output, V)
    eigs = np.linalg.eigvalsh(Q)[:, 0]
    k = int(np.argmin(eigs))
    minors = _least_leading_minors(Q)

    def min_eig_at(node):
        Vq = spherical_directions(np.asarray(node)[None, :])
        return float(np.linalg.eigvalsh(acoustic_tensors_on_grid(output, Vq))[0, 0])

    res = minimize(
        min_eig_at,
        nodes[k],
        method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 400},
    )
    best = min(float(eigs[k]), float(res.fun))
    arg = tuple(float(x) for x in (res.x if res.fun <= eigs[k] else nodes[k]))
    return EllipticityResult(
        min_eigenvalue=best,
        min_least_minor=float(np.min(minors)),
        argmin_node=arg,
    )


def moduli_scan(model, state, grid=None, output=None):
    """Per-node (mu_t, q_t, theta_t) moduli from full direction contractions.

    Returns (nodes (k,2), mu (k,), q (k,), theta (k,)).
    """
    grid = grid or SphericalGrid()
    nodes = grid.nodes
    e = spherical_directions(nodes)
    if output is None:
        output = model.energy(state, order=2)
    A, B, S = output.d2_FF, output.d2_Fd0, output.d2_d0d0
    mu = np.einsum("iIjJ,ki,kI,kj,kJ->k", A, e, e, e, e)
    q = np.einsum("iIp,ki,kI,kp->k", B, e, e, e)
    theta = np.einsum("pq,kp,kq->k", S, e, e)
    return nodes, mu, q, theta


def write_scan(path, model, state, grid=None):
    """Export (theta, psi, min_eig, least_minor, mu_t, q_t, theta_t) rows."""
    grid = grid or SphericalGrid()
    output = model.energy(state, order=2)
    nodes = grid.nodes
    V = spherical_directions(nodes)
    Q = acoustic_tensors_on_grid(output, V)
    eigs = np.linalg.eigvalsh(Q)[:, 0]
    minors = _least_leading_minors(Q)
    _, mu, q, theta = moduli_scan(model, state, grid, output=output)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# eescan-v1\n# theta psi min_eig least_minor mu_t q_t theta_t\n")
        for k in range(nodes.shape[0]):
            row = (nodes[k, 0], nodes[k, 1], eigs[k], minors[k], mu[k], q[k], theta[k])
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
