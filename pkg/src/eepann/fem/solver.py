"""Monolithic displacement/potential Newton solver on hexahedral meshes.

The discrete problem is the stationarity of the saddle functional

    Pi(u, phi) = sum_qp w * Psi(F, e0) - f0 . u terms + omega0 * phi terms,

with F = I + grad0 u and e0 = -grad0 phi at each quadrature point and Psi
obtained from the internal-energy model through its Legendre transform.
Residual and tangent are the exact gradient and Hessian of Pi; the
electric diagonal block is therefore negative definite (saddle structure)
and the coupled system is solved by a direct sparse factorization.

Degrees of freedom: three displacement components per node (3 * node + i)
followed by one potential per node (3 * n_nodes + node). Dirichlet data is
scaled by the load factor and eliminated from the reduced system.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ConfigError, LegendreFailure, NewtonFailure, StepFailure
from ..legendre import free_energy
from ..tensors import det3
from .elements import element_for_order

__all__ = ["BoundaryConditions", "DofMap", "FemSolver", "load_stepping", "write_solution"]

log = logging.getLogger(__name__)


@dataclass
class BoundaryConditions:
    """Dirichlet data (at load factor 1) plus volume and surface loads.

    dirichlet_u: list of (node set name or id array, component, value)
    dirichlet_phi: list of (node set name or id array, value)
    body_force: (3,) force per unit reference volume, or None
    surface_charge: list of (face set name, omega0) surface charge density
    """

    dirichlet_u: list = field(default_factory=list)
    dirichlet_phi: list = field(default_factory=list)
    body_force: np.ndarray = None
    surface_charge: list = field(default_factory=list)


class DofMap:
    """Global numbering and Dirichlet bookkeeping for both fields."""

    def __init__(self, mesh, bcs):
        self.n_nodes = mesh.n_nodes
        self.n_dofs = 4 * mesh.n_nodes
        fixed = {}

        def resolve(nodes):
            if isinstance(nodes, str):
                if nodes not in mesh.node_sets:
                    raise ConfigError(f"unknown node set {nodes!r}")
                return mesh.node_sets[nodes]
            return np.atleast_1d(np.asarray(nodes, dtype=int))

        for nodes, comp, value in bcs.dirichlet_u:
            for n in resolve(nodes):
                fixed[3 * n + comp] = float(value)
        for nodes, value in bcs.dirichlet_phi:
            for n in resolve(nodes):
                fixed[3 * self.n_nodes + n] = float(value)
        self.fixed_dofs = np.array(sorted(fixed), dtype=int)
        self.fixed_values = np.array([fixed[d] for d in self.fixed_dofs])
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.fixed_dofs] = False
        self.free_dofs = np.nonzero(mask)[0]

    def u_dof(self, node, comp):
        return 3 * node + comp

    def phi_dof(self, node):
        return 3 * self.n_nodes + node

    def apply_dirichlet(self, fields, lam):
        fields[self.fixed_dofs] = lam * self.fixed_values


class FemSolver:
    """Assembly and Newton iteration for one mesh/BC/model triple."""

    newton_tol = 1e-9
    max_newton = 25

    def __init__(self, mesh, bcs, model):
        if not mesh.check_jacobians():
            raise ConfigError("mesh has non-positive reference Jacobians")
        self.mesh = mesh
        self.bcs = bcs
        self.model = model
        self.element = element_for_order(mesh.order)
        self.dofs = DofMap(mesh, bcs)
        self._precompute()
        nqp = len(self.element.quad_weights)
        # Legendre warm starts per quadrature point
        self._d0 = np.zeros((mesh.n_elements, nqp, 3))

    def _precompute(self):
        el = self.element
        nqp = len(el.quad_weights)
        ne = self.mesh.n_elements
        npe = el.n_nodes
        self.gradN = np.empty((ne, nqp, npe, 3))
        self.wdetJ = np.empty((ne, nqp))
        self.shapeN = np.array([el.shape(xi) for xi in el.quad_points])
        for e, conn in enumerate(self.mesh.elements):
            X = self.mesh.nodes[conn]
            for q, xi in enumerate(el.quad_points):
                dN = el.shape_grad(xi)  # parametric gradients
                Jm = dN.T @ X  # dX/dxi
                self.gradN[e, q] = dN @ np.linalg.inv(Jm).T
                self.wdetJ[e, q] = el.quad_weights[q] * np.linalg.det(Jm)

        # surface-charge quadrature: (element, face nodes, N values, dA weights)
        self._charge_faces = []
        for set_name, omega in self.bcs.surface_charge:
            if set_name not in self.mesh.face_sets:
                raise ConfigError(f"unknown face set {set_name!r}")
            for e, face in self.mesh.face_sets[set_name]:
                pts, wts, plane = el.face_quadrature(face)
                X = self.mesh.nodes[self.mesh.elements[e]]
                Nvals = np.array([el.shape(xi) for xi in pts])
                dA = np.empty(len(wts))
                for q, xi in enumerate(pts):
                    dN = el.shape_grad(xi)
                    Jm = dN.T @ X  # (3 param, 3 space); rows are dX/dxi_k
                    t1, t2 = Jm[plane[0]], Jm[plane[1]]
                    dA[q] = wts[q] * np.linalg.norm(np.cross(t1, t2))
                self._charge_faces.append((e, omega, Nvals, dA))

    # --- field access -----------------------------------------------------

    def zero_fields(self):
        return np.zeros(self.dofs.n_dofs)

    def split_fields(self, fields):
        n = self.mesh.n_nodes
        return fields[: 3 * n].reshape(n, 3), fields[3 * n :]

    def _qp_state(self, e, q, u_el, phi_el):
        g = self.gradN[e, q]
        F = np.eye(3) + u_el.T @ g
        e0 = -(phi_el @ g)
        return F, e0

    # --- energy, residual, tangent ----------------------------------------

    def total_potential(self, fields, lam):
        """Discrete saddle functional; the residual is its exact gradient."""
        u, phi = self.split_fields(fields)
        total = 0.0
        for e, conn in enumerate(self.mesh.elements):
            u_el, phi_el = u[conn], phi[conn]
            for q in range(self.wdetJ.shape[1]):
                F, e0 = self._qp_state(e, q, u_el, phi_el)
                fe = free_energy(self.model, F, e0, guess=self._d0[e, q])
                total += self.wdetJ[e, q] * fe.psi
                if self.bcs.body_force is not None:
                    Nv = self.shapeN[q]
                    total -= self.wdetJ[e, q] * lam * (
                        np.asarray(self.bcs.body_force) @ (u_el.T @ Nv)
                    )
        for e, omega, Nvals, dA in self._charge_faces:
            conn = self.mesh.elements[e]
            phi_el = phi[conn]
            for q in range(len(dA)):
                total += lam * omega * dA[q] * (Nvals[q] @ phi_el)
        return total

    def assemble(self, fields, lam, need_tangent=True):
        """Residual (and tangent) of the saddle functional at given fields."""
        u, phi = self.split_fields(fields)
        ndof = self.dofs.n_dofs
        n = self.mesh.n_nodes
        R = np.zeros(ndof)
        rows, cols, vals = [], [], []
        npe = self.element.n_nodes
        f0 = None if self.bcs.body_force is None else np.asarray(self.bcs.body_force)

        for e, conn in enumerate(self.mesh.elements):
            u_el, phi_el = u[conn], phi[conn]
            r_u = np.zeros((npe, 3))
            r_p = np.zeros(npe)
            k_uu = np.zeros((npe, 3, npe, 3))
            k_up = np.zeros((npe, 3, npe))
            k_pp = np.zeros((npe, npe))
            for q in range(self.wdetJ.shape[1]):
                w = self.wdetJ[e, q]
                g = self.gradN[e, q]
                F, e0 = self._qp_state(e, q, u_el, phi_el)
                try:
                    fe = free_energy(self.model, F, e0, guess=self._d0[e, q])
                except LegendreFailure as exc:
                    raise NewtonFailure(
                        f"constitutive solve failed in element {e}: {exc}"
                    ) from exc
                self._d0[e, q] = fe.d0
                r_u += w * np.einsum("iI,aI->ai", fe.P, g)
                r_p += w * (g @ fe.d0)
                if f0 is not None:
                    r_u -= w * lam * np.outer(self.shapeN[q], f0)
                if need_tangent:
                    k_uu += w * np.einsum("aI,iIjJ,bJ->aibj", g, fe.d2_FF, g)
                    k_up -= w * np.einsum("aI,iIK,bK->aib", g, fe.d2_Fe, g)
                    k_pp -= w * np.einsum("aK,KL,bL->ab", g, fe.d2_ee, g)

            udofs = (3 * conn[:, None] + np.arange(3)).ravel()
            pdofs = 3 * n + conn
            np.add.at(R, udofs, r_u.ravel())
            np.add.at(R, pdofs, r_p)
            if need_tangent:
                eu = udofs
                rows.append(np.repeat(eu, npe * 3))
                cols.append(np.tile(eu, npe * 3))
                vals.append(k_uu.reshape(npe * 3, npe * 3).ravel())
                rows.append(np.repeat(eu, npe))
                cols.append(np.tile(pdofs, npe * 3))
                vals.append(k_up.reshape(npe * 3, npe).ravel())
                rows.append(np.repeat(pdofs, npe * 3))
                cols.append(np.tile(eu, npe))
                vals.append(k_up.reshape(npe * 3, npe).T.ravel())
                rows.append(np.repeat(pdofs, npe))
                cols.append(np.tile(pdofs, npe))
                vals.append(k_pp.ravel())

        for e, omega, Nvals, dA in self._charge_faces:
            pdofs = 3 * n + self.mesh.elements[e]
            np.add.at(R, pdofs, lam * omega * (dA @ Nvals))

        if not need_tangent:
            return R, None
        K = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(ndof, ndof),
        ).tocsc()
        return R, K

    def newton(self, lam, fields=None):
        """Solve the coupled system at one load factor; returns (fields, history)."""
        fields = self.zero_fields() if fields is None else fields.copy()
        self.dofs.apply_dirichlet(fields, lam)
        free = self.dofs.free_dofs
        history = []
        for it in range(self.max_newton):
            R, K = self.assemble(fields, lam)
            rnorm = np.max(np.abs(R[free])) if free.size else 0.0
            history.append(float(rnorm))
            if rnorm <= self.newton_tol:
                return fields, history
            Kff = K[free][:, free]
            try:
                step = spla.spsolve(Kff, -R[free])
            except RuntimeError as exc:
                raise NewtonFailure(f"linear solve failed: {exc}", history=history) from exc
            if not np.all(np.isfinite(step)):
                raise NewtonFailure("linear solve produced non-finite step", history=history)
            fields[free] += step
        R, _ = self.assemble(fields, lam, need_tangent=False)
        rnorm = np.max(np.abs(R[free]))
        history.append(float(rnorm))
        if rnorm <= self.newton_tol:
            return fields, history
        raise NewtonFailure(
            f"no convergence in {self.max_newton} iterations, |R|_inf = {rnorm:g}",
            history=history,
        )


def load_stepping(solver, schedule, min_step=1e-4):
    """Warm-started Newton over a monotone load schedule in [0, 1].

    On failure the step is halved down to ``min_step``; a clean StepFailure
    carrying the last converged load factor is raised if that floor is hit.
    Returns a list of (lambda, fields, history) snapshots at the schedule
    points actually reached.
    """
    schedule = list(schedule)
    if any(b < a for a, b in zip(schedule, schedule[1:])) or schedule[-1] > 1.0 + 1e-12:
        raise ConfigError("schedule must be monotone in [0, 1]")
    snapshots = []
    fields, history = solver.newton(schedule[0], solver.zero_fields())
    current = schedule[0]
    snapshots.append((current, fields.copy(), history))
    d0_backup = solver._d0.copy()
    for target in schedule[1:]:
        while current < target:
            attempt = target
            while True:
                try:
                    fields_new, history = solver.newton(attempt, fields)
                    fields = fields_new
                    current = attempt
                    d0_backup = solver._d0.copy()
                    break
                except NewtonFailure:
                    solver._d0 = d0_backup.copy()
                    if attempt - current <= min_step:
                        exc = StepFailure(
                            f"load stepping stalled at lambda = {current:g}",
                            last_lambda=current,
                        )
                        exc.snapshots = snapshots
                        raise exc from None
                    attempt = current + 0.5 * (attempt - current)
        snapshots.append((current, fields.copy(), history))
    return snapshots


def write_solution(path, solver, fields, lam=None):
    """Per-node fields plus per-quadrature-point P and Cauchy stress tables."""
    mesh = solver.mesh
    u, phi = solver.split_fields(fields)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# eesol-v1\n")
        if lam is not None:
            fh.write(f"# lambda {lam:.17g}\n")
        fh.write(f"nodes {mesh.n_nodes}\n# id ux uy uz phi\n")
        for i in range(mesh.n_nodes):
            fh.write(
                f"{i} " + " ".join(f"{v:.17g}" for v in u[i]) + f" {phi[i]:.17g}\n"
            )
        nqp = solver.wdetJ.shape[1]
        fh.write(f"qpoints {mesh.n_elements * nqp}\n# elem qp X Y Z P(9) sigma(9)\n")
        for e, conn in enumerate(mesh.elements):
            u_el, phi_el = u[conn], phi[conn]
            X_el = mesh.nodes[conn]
            for q in range(nqp):
                F, e0 = solver._qp_state(e, q, u_el, phi_el)
                fe = free_energy(solver.model, F, e0, guess=solver._d0[e, q])
                J = det3(F)
                sigma = (fe.P @ F.T) / J
                Xq = solver.shapeN[q] @ X_el
                nums = np.concatenate([Xq, fe.P.ravel(), sigma.ravel()])
                fh.write(f"{e} {q} " + " ".join(f"{v:.17g}" for v in nums) + "\n")
