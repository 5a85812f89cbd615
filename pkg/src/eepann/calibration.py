"""Sobolev calibration of the network parameters against (P, e0) data.

The loss is the mean over records of |P_data - P_model|^2 + |e0_data -
e0_model|^2. Its parameter gradient is assembled in closed form through the
single-hidden-layer derivative chain, including the dependence of the
stress-normalization constants on the parameters (the ReLU split uses the
subgradient 0 at the kink). The invariant stacks of a dataset do not depend
on the parameters, so they are precomputed once per dataset and every epoch
reduces to small dense contractions in invariant space.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .invariants import ConvexityMode, Isotropic, compute_invariants, reference_invariants
from .pann import PannParams, _norm_weights, growth_term, init_pann_params

__all__ = [
    "CalibrationConfig",
    "CalibrationReport",
    "RestartResult",
    "SobolevData",
    "mse_loss",
    "AdamState",
    "adam_step",
    "calibrate",
    "evaluate_mse",
    "usable_records",
]

log = logging.getLogger(__name__)

_J_IDX = 2


@dataclass
class CalibrationConfig:
    epochs: int = 2000
    learning_rate: float = 2e-3
    restarts: int = 3
    seed: int = 0
    batch: int = None  # None = full batch

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")


def usable_records(records):
    """Drop records flagged non-elliptic; unknown flags are kept."""
    return [r for r in records if r.elliptic is not False]


class SobolevData:
    """Precomputed invariant stacks of a dataset for one (symmetry, mode)."""

    def __init__(self, records, symmetry, mode):
        records = usable_records(records)
        if not records:
            raise ConfigError("dataset has no usable records")
        self.symmetry = symmetry
        self.mode = mode
        B = len(records)
        n = None
        I_list, phi_list, volp_list = [], [], []
        targets = np.empty((B, 12))
        for k, r in enumerate(records):
            inv = compute_invariants(r.F, r.d0, symmetry, mode, order=1)
            n = inv.n
            I_list.append(inv.values)
            phi_list.append(
                np.concatenate([inv.dI_dF.reshape(n, 9), inv.dI_dd0], axis=1)
            )
            volp_list.append(growth_term(inv.values[_J_IDX], order=1)[1])
            targets[k, :9] = r.P.ravel()
            targets[k, 9:] = r.e0
        self.I = np.array(I_list)  # (B, n)
        self.phi = np.array(phi_list)  # (B, n, 12), F block then d0 block
        self.volp = np.array(volp_list)
        self.targets = targets
        self.n = n
        self.B = B
        self.I_ref = reference_invariants(symmetry, mode)
        self.w_norm, self.v_norm = _norm_weights(symmetry, mode)
        base = 7 if mode is ConvexityMode.POLYCONVEX else 6
        self._ti_idx = None if isinstance(symmetry, Isotropic) else (base, base + 1)

    def _coefficients(self, W1, W2, b, I_batch):
        H = I_batch @ W1.T + b
        S = expit(H)
        g = (W2 * S) @ W1
        return H, S, g

    def _stress_coeffs(self, W1, W2, b):
        h0 = W1 @ self.I_ref + b
        s0 = expit(h0)
        g0 = (W2 * s0) @ W1
        s = np.zeros(self.n)
        if self.v_norm is None:
            s[_J_IDX] = -float(self.w_norm @ g0)
            x = None
        else:
            x = float(self.v_norm @ g0)
            s[_J_IDX] = -(float(self.w_norm @ g0) + 2.0 * max(x, 0.0))
            j1, j2 = self._ti_idx
            s[j1] = max(-x, 0.0)
            s[j2] = max(x, 0.0)
        return s, x, h0, s0

    def loss(self, params, indices=None):
        return self.loss_and_grad(params, indices=indices, need_grad=False)[0]

    def loss_and_grad(self, params, indices=None, need_grad=True):
        """MSE and its gradient w.r.t. (W1, W2, b) on a record subset."""
        W1, W2, b = params.W1, params.W2, params.b
        if params.n != self.n:
            raise ConfigError(f"parameter width {params.n} does not match dataset {self.n}")
        I_b = self.I if indices is None else self.I[indices]
        phi = self.phi if indices is None else self.phi[indices]
        volp = self.volp if indices is None else self.volp[indices]
        tgt = self.targets if indices is None else self.targets[indices]
        B = I_b.shape[0]

        _, S, g = self._coefficients(W1, W2, b, I_b)
        s, x, h0, s0 = self._stress_coeffs(W1, W2, b)
        c = g + s
        c[:, _J_IDX] += volp
        pred = np.einsum("bn,bnx->bx", c, phi)
        r = pred - tgt
        loss = float(np.sum(r * r)) / B
        if not need_grad:
            return loss, None

        A = (2.0 / B) * np.einsum("bx,bnx->bn", r, phi)  # dloss/dc
        Sp = S * (1.0 - S)
        U = A @ W1.T
        gW2 = np.einsum("ba,ba->a", S, U)
        gb = W2 * np.einsum("ba,ba->a", Sp, U)
        gW1 = W2[:, None] * (np.einsum("ba,bi->ai", Sp * U, I_b) + S.T @ A)

        # chain through the normalization constants (reference-point gradient)
        Abar = A.sum(axis=0)
        if self.v_norm is None:
            omega = -Abar[_J_IDX] * self.w_norm
        else:
            chi_p = 1.0 if x > 0.0 else 0.0
            chi_m = 1.0 if x < 0.0 else 0.0
            j1, j2 = self._ti_idx
            omega = -Abar[_J_IDX] * self.w_norm + (
                -2.0 * Abar[_J_IDX] * chi_p - Abar[j1] * chi_m + Abar[j2] * chi_p
            ) * self.v_norm
        sp0 = s0 * (1.0 - s0)
        u0 = W1 @ omega
        gW2 += s0 * u0
        gb += W2 * sp0 * u0
        gW1 += W2[:, None] * (np.outer(sp0 * u0, self.I_ref) + np.outer(s0, omega))

        return loss, {"W1": gW1, "W2": gW2, "b": gb}


def mse_loss(params, records):
    """Loss and parameter gradient on a list of records (convenience path)."""
    data = SobolevData(records, params.symmetry, params.mode)
    return data.loss_and_grad(params)


def evaluate_mse(params, records):
    """MSE of a parameter set on a record list (non-elliptic records dropped)."""
    data = SobolevData(records, params.symmetry, params.mode)
    return data.loss(params)


@dataclass
class AdamState:
    """First/second-moment accumulators, one entry per parameter array."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state, grads, lr):
    """One bias-corrected moment update; returns the parameter increments."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    updates = {}
    for key, g in grads.items():
        m = state.m.get(key)
        if m is None:
            m = np.zeros_like(g)
            state.v[key] = np.zeros_like(g)
        v = state.v[key]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[key] = m
        state.v[key] = v
        mhat = m / (1.0 - b1**state.t)
        vhat = v / (1.0 - b2**state.t)
        updates[key] = -lr * mhat / (np.sqrt(vhat) + state.eps)
    return updates


@dataclass
class RestartResult:
    curve: np.ndarray
    final_calib_mse: float
    final_test_mse: float
    params: PannParams
    failed: bool = False

    @property
    def log10_calib(self):
        return float(np.log10(self.final_calib_mse))

    @property
    def log10_test(self):
        return float(np.log10(self.final_test_mse))


@dataclass
class CalibrationReport:
    restarts: list
    best_index: int

    @property
    def best(self):
        return self.restarts[self.best_index]

    def table(self):
        lines = ["restart  log10(MSE) calib  log10(MSE) test"]
        for k, r in enumerate(self.restarts):
            if r.failed:
                lines.append(f"{k:7d}  diverged")
                continue
            star = " *" if k == self.best_index else ""
            lines.append(f"{k:7d}  {r.log10_calib:17.4f}  {r.log10_test:15.4f}{star}")
        return "\n".join(lines)


def _run_restart(data, test_data, symmetry, mode, hidden, cfg, seed_seq):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    params = init_pann_params(symmetry, mode, hidden, rng)
    state = AdamState()
    poly = mode is ConvexityMode.POLYCONVEX
    curve = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        if cfg.batch is None:
            batches = [None]
        else:
            perm = rng.permutation(data.B)
            batches = [perm[i : i + cfg.batch] for i in range(0, data.B, cfg.batch)]
        epoch_loss = 0.0
        for idx in batches:
            loss, grads = data.loss_and_grad(params, indices=idx)
            epoch_loss += loss * (1 if idx is None else len(idx) / data.B)
            if not np.isfinite(loss):
                return RestartResult(curve[: epoch + 1], np.inf, np.inf, params, failed=True)
            updates = adam_step(state, grads, cfg.learning_rate)
            params.W1 += updates["W1"]
            params.W2 += updates["W2"]
            params.b += updates["b"]
            if poly:
                np.maximum(params.W1, 0.0, out=params.W1)
                np.maximum(params.W2, 0.0, out=params.W2)
            params.bump_version()
        curve[epoch] = epoch_loss
    final_calib = data.loss(params)
    final_test = test_data.loss(params)
    if not (np.isfinite(final_calib) and np.isfinite(final_test)):
        return RestartResult(curve, np.inf, np.inf, params, failed=True)
    return RestartResult(curve, final_calib, final_test, params)


def calibrate(calib_records, test_records, symmetry, mode, hidden, cfg, workers=1):
    """Multi-restart calibration; the best restart minimizes the test MSE.

    Restarts are independent (fresh seeds) and may run in parallel without
    changing any result. Diverged restarts are reported and excluded from
    the best-of selection.
    """
    data = SobolevData(calib_records, symmetry, mode)
    test_data = SobolevData(test_records, symmetry, mode)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)

    if workers > 1:
        from multiprocessing import get_context

        with get_context("spawn").Pool(workers) as pool:
            results = pool.starmap(
                _run_restart,
                [(data, test_data, symmetry, mode, hidden, cfg, s) for s in seeds],
            )
    else:
        results = [
            _run_restart(data, test_data, symmetry, mode, hidden, cfg, s) for s in seeds
        ]

    ok = [k for k, r in enumerate(results) if not r.failed]
    if not ok:
        raise ConfigError("all calibration restarts diverged")
    best = min(ok, key=lambda k: results[k].final_test_mse)
    for k, r in enumerate(results):
        if r.failed:
            log.warning("restart %d diverged and was excluded", k)
    return CalibrationReport(results, best)
