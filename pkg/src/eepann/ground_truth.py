"""Analytical ground-truth energies and the rank-one laminate homogenizer.

The phenomenological model combines a Mooney-Rivlin mechanical part with an
ideal-dielectric coupling,

    mu1/2 I1 + mu2/2 I2 - (mu1 + 2 mu2) log J + lam/2 (J - 1)^2 + I5/(2 eps J),

which is normalized at the reference state by construction. The two-phase
laminate uses this potential in phase a and a contrast-scaled variant in
phase b (factor f_m on the mechanical group, permittivity f_e * eps in the
coupling). The homogenized laminate energy minimizes the volume-weighted
phase energies over the interface jumps

    F_a = F + c_b a (x) N,   F_b = F - c_a a (x) N,
    d0_a = d0 + c_b beta,    d0_b = d0 - c_a beta,   beta . N = 0,

so the phase averages recover (F, d0) exactly. First derivatives follow
from the envelope theorem, second derivatives from the Schur complement of
the inner-variable Hessian.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .core import EnergyOutput, InvariantEnergyModel, MaterialState
from .errors import ConfigError, HomogenizationFailure
from .invariants import ConvexityMode, Isotropic
from .tensors import as_vector3

__all__ = [
    "MooneyRivlinParams",
    "LaminateParams",
    "MooneyRivlin",
    "LaminatePhase",
    "HomogenizedLaminate",
    "mr_energy",
]

log = logging.getLogger(__name__)


@dataclass
class MooneyRivlinParams:
    mu1: float = 0.5
    mu2: float = 0.5
    lam: float = 5.0
    eps: float = 1.0

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0 or self.eps <= 0:
            raise ConfigError("mu1, mu2, eps must be positive")
        if self.lam < 0:
            raise ConfigError("lam must be non-negative")


@dataclass
class LaminateParams:
    phase_a: MooneyRivlinParams
    f_m: float = 2.0
    f_e: float = 2.0
    c_a: float = 0.6
    normal: np.ndarray = None

    def __post_init__(self):
        if not 0.0 < self.c_a < 1.0:
            raise ConfigError("volume fraction c_a must be in (0, 1)")
        if self.normal is None:
            self.normal = 0.5 * np.array([1.0, 1.0, np.sqrt(2.0)])
        self.normal = as_vector3(self.normal)
        if abs(np.linalg.norm(self.normal) - 1.0) > 1e-12:
            raise ConfigError("lamination normal must be a unit vector")


class _MrLikePotential(InvariantEnergyModel):
    """Invariant-space potential with coefficients (a1, a2, clog, clam, ccoup).

    Evaluates a1 I1 + a2 I2 - clog log J + clam/2 (J-1)^2 + ccoup I6 on the
    isotropic unconstrained set (I6 = I5/J carries the coupling).
    """

    symmetry = Isotropic()
    mode = ConvexityMode.UNCONSTRAINED

    def __init__(self, a1, a2, clog, clam, ccoup):
        self._c = (a1, a2, clog, clam, ccoup)

    def potential_terms(self, values, order):
        a1, a2, clog, clam, ccoup = self._c
        J = values[2]
        value = (
            a1 * values[0]
            + a2 * values[1]
            - clog * np.log(J)
            + 0.5 * clam * (J - 1.0) ** 2
            + ccoup * values[5]
        )
        if order < 1:
            return value, None, None
        grad = np.array([a1, a2, -clog / J + clam * (J - 1.0), 0.0, 0.0, ccoup])
        if order < 2:
            return value, grad, None
        hess = np.zeros((6, 6))
        hess[2, 2] = clog / J**2 + clam
        return value, grad, hess


class MooneyRivlin(_MrLikePotential):
    """Isotropic Mooney-Rivlin plus ideal-dielectric coupling."""

    def __init__(self, params=None):
        self.params = params or MooneyRivlinParams()
        p = self.params
        super().__init__(
            0.5 * p.mu1, 0.5 * p.mu2, p.mu1 + 2.0 * p.mu2, p.lam, 1.0 / (2.0 * p.eps)
        )


def mr_energy(state, params, order=2):
    """Evaluate the Mooney-Rivlin / ideal-dielectric model at one state."""
    return MooneyRivlin(params).energy(state, order)


class LaminatePhase(_MrLikePotential):
    """One laminate phase: 'a' is plain Mooney-Rivlin, 'b' contrast-scaled."""

    def __init__(self, phase, params):
        if phase not in ("a", "b"):
            raise ConfigError(f"phase must be 'a' or 'b', got {phase!r}")
        self.phase = phase
        self.params = params
        p = params.phase_a
        if phase == "a":
            super().__init__(0.5 * p.mu1, 0.5 * p.mu2, p.mu1 + 2.0 * p.mu2, p.lam, 1.0 / (2.0 * p.eps))
        else:
            fm = params.f_m
            super().__init__(
                fm * 0.5 * p.mu1,
                fm * 0.5 * p.mu2,
                fm * (p.mu1 + 2.0 * p.mu2),
                fm * p.lam,
                1.0 / (2.0 * params.f_e * p.eps),
            )


def _tangent_basis(normal):
    """Orthonormal basis of the plane perpendicular to the unit normal."""
    ref = np.array([1.0, 0.0, 0.0])
    if abs(normal @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    t1 = np.cross(normal, ref)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return t1, t2


class HomogenizedLaminate:
    """Rank-one laminate homogenized by inner minimization over the jumps.

    The inner problem has 5 unknowns: the mechanical jump amplitude a in
    R^3 and the tangential d0 jump expressed in an orthonormal basis of the
    lamination plane. A warm-start cache keyed per instance makes repeated
    nearby queries cheap; use one instance per thread.
    """

    max_iter = 50
    grad_tol = 1e-12

    def __init__(self, params=None):
        self.params = params or LaminateParams(MooneyRivlinParams())
        self.phase_a = LaminatePhase("a", self.params)
        self.phase_b = LaminatePhase("b", self.params)
        self._t1, self._t2 = _tangent_basis(self.params.normal)
        self._warm = np.zeros(5)

    # --- inner problem -------------------------------------------------

    def _phase_states(self, F, d0, y):
        p = self.params
        N = p.normal
        alpha = y[:3]
        beta = y[3] * self._t1 + y[4] * self._t2
        cb, ca = 1.0 - p.c_a, p.c_a
        Fa = F + cb * np.outer(alpha, N)
        Fb = F - ca * np.outer(alpha, N)
        return Fa, Fb, d0 + cb * beta, d0 - ca * beta

    def _inner_value(self, F, d0, y):
        p = self.params
        Fa, Fb, da, db = self._phase_states(F, d0, y)
        if np.linalg.det(Fa) <= 0.0 or np.linalg.det(Fb) <= 0.0:
            return np.inf, None, None
        ea = self.phase_a.energy(MaterialState(Fa, da), order=0)
        eb = self.phase_b.energy(MaterialState(Fb, db), order=0)
        return p.c_a * ea.e + (1.0 - p.c_a) * eb.e, ea, eb

    def _inner_system(self, F, d0, y, order):
        """Weighted energy with gradient (5,) and Hessian (5,5) in the jumps."""
        p = self.params
        N = p.normal
        ca, cb = p.c_a, 1.0 - p.c_a
        Fa, Fb, da, db = self._phase_states(F, d0, y)
        oa = self.phase_a.energy(MaterialState(Fa, da), order)
        ob = self.phase_b.energy(MaterialState(Fb, db), order)
        T = np.stack([self._t1, self._t2], axis=1)  # (3, 2)

        w = ca * oa.e + cb * ob.e
        dP = oa.P - ob.P
        de = oa.e0 - ob.e0
        grad = np.empty(5)
        grad[:3] = ca * cb * (dP @ N)
        grad[3:] = ca * cb * (de @ T)
        if order < 2:
            return w, grad, None, oa, ob

        A = cb * oa.d2_FF + ca * ob.d2_FF  # weights from the two chain factors
        B = cb * oa.d2_Fd0 + ca * ob.d2_Fd0
        S = cb * oa.d2_d0d0 + ca * ob.d2_d0d0
        H = np.empty((5, 5))
        H[:3, :3] = ca * cb * np.einsum("iIkL,I,L->ik", A, N, N)
        Hab = ca * cb * np.einsum("iIp,I,pj->ij", B, N, T)
        H[:3, 3:] = Hab
        H[3:, :3] = Hab.T
        H[3:, 3:] = ca * cb * np.einsum("pq,pi,qj->ij", S, T, T)
        return w, grad, H, oa, ob

    def _minimize_inner(self, F, d0, y0):
        y = y0.copy()
        w, grad, H, oa, ob = self._inner_system(F, d0, y, order=2)
        for _ in range(self.max_iter):
            gnorm = np.linalg.norm(grad)
            if gnorm <= self.grad_tol:
                return y, H, oa, ob
            # Newton direction with ridge fallback when H is not PD
            tau = 0.0
            while True:
                try:
                    L = np.linalg.cholesky(H + tau * np.eye(5))
                    break
                except np.linalg.LinAlgError:
                    tau = max(2.0 * tau, 1e-8 * max(1.0, np.trace(H) / 5.0), 1e-12)
            step = -np.linalg.solve(H + tau * np.eye(5), grad)
            # backtracking on the energy, also guards phase determinants;
            # the rounding slack keeps tiny terminal steps from stalling
            slack = 4e-16 * max(1.0, abs(w))
            t = 1.0
            for _ in range(40):
                cand, _, _ = self._inner_value(F, d0, y + t * step)
                if cand < w + 1e-4 * t * (grad @ step) + slack:
                    break
                t *= 0.5
            else:
                raise HomogenizationFailure(
                    f"inner line search stalled, |grad| = {gnorm:g}", residual_norm=gnorm
                )
            y = y + t * step
            w, grad, H, oa, ob = self._inner_system(F, d0, y, order=2)
        gnorm = np.linalg.norm(grad)
        if gnorm <= self.grad_tol:
            return y, H, oa, ob
        raise HomogenizationFailure(
            f"inner Newton did not converge in {self.max_iter} iterations, |grad| = {gnorm:g}",
            residual_norm=gnorm,
        )

    # --- outer evaluation ----------------------------------------------

    def energy(self, state, order=2):
        p = self.params
        ca, cb = p.c_a, 1.0 - p.c_a
        N = p.normal
        T = np.stack([self._t1, self._t2], axis=1)
        F, d0 = state.F, state.d0

        try:
            y, H_in, oa, ob = self._minimize_inner(F, d0, self._warm)
        except HomogenizationFailure:
            # retry cold in case the warm start sits in the wrong basin
            y, H_in, oa, ob = self._minimize_inner(F, d0, np.zeros(5))
        self._warm = y.copy()

        eigmin = float(np.min(np.linalg.eigvalsh(H_in)))
        info = {
            "jumps": y.copy(),
            "inner_hessian_min_eig": eigmin,
            "inner_hessian_indefinite": eigmin < -1e-10,
        }
        out = EnergyOutput(e=ca * oa.e + cb * ob.e, info=info)
        if order < 1:
            return out

        # envelope theorem: inner stationarity removes the jump sensitivities
        out.P = ca * oa.P + cb * ob.P
        out.e0 = ca * oa.e0 + cb * ob.e0
        if order < 2:
            return out

        A = ca * oa.d2_FF + cb * ob.d2_FF
        B = ca * oa.d2_Fd0 + cb * ob.d2_Fd0
        S = ca * oa.d2_d0d0 + cb * ob.d2_d0d0
        dA = oa.d2_FF - ob.d2_FF
        dB = oa.d2_Fd0 - ob.d2_Fd0
        dS = oa.d2_d0d0 - ob.d2_d0d0

        # cross blocks d^2 W / d(F, d0) d(jumps), flattened to (12, 5)
        E_xy = np.zeros((12, 5))
        E_xy[:9, :3] = (ca * cb) * np.einsum("iIkJ,J->iIk", dA, N).reshape(9, 3)
        E_xy[:9, 3:] = (ca * cb) * np.einsum("iIp,pj->iIj", dB, T).reshape(9, 2)
        E_xy[9:, :3] = (ca * cb) * np.einsum("kJp,J->pk", dB, N)
        E_xy[9:, 3:] = (ca * cb) * (dS @ T)

        E_xx = np.zeros((12, 12))
        E_xx[:9, :9] = A.reshape(9, 9)
        E_xx[:9, 9:] = B.reshape(9, 3)
        E_xx[9:, :9] = B.reshape(9, 3).T
        E_xx[9:, 9:] = S

        D2 = E_xx - E_xy @ np.linalg.solve(H_in, E_xy.T)
        out.d2_FF = D2[:9, :9].reshape(3, 3, 3, 3)
        out.d2_Fd0 = D2[:9, 9:].reshape(3, 3, 3)
        out.d2_d0d0 = D2[9:, 9:]
        return out
