"""Physics-augmented neural network internal energy density.

The model is the sum of three invariant-space terms: a single-hidden-layer
feed-forward network with Softplus activation, an analytic volumetric
growth term (J + 1/J - 2)^2, and a stress-normalization term linear in the
invariants whose coefficients are derived from the network's own gradient
at the reference state so that P and e0 vanish exactly at F = I, d0 = 0.

In polyconvex mode the weights W1, W2 are non-negative, which together with
the convex non-decreasing activation makes the network convex and
non-decreasing in the (polyconvex) invariants.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import EnergyOutput, InvariantEnergyModel, assemble_energy
from .errors import ConfigError, InvalidDeformation, ParseError
from .invariants import (
    ConvexityMode,
    Isotropic,
    TransverselyIsotropic,
    invariant_count,
    ordering_tag,
    reference_invariants,
)

__all__ = [
    "PannParams",
    "NormalizationConstants",
    "nn_potential",
    "growth_term",
    "normalization_constants",
    "PannModel",
    "init_pann_params",
    "save_pann",
    "load_pann",
]

_J_IDX = 2  # position of J in every invariant ordering


@dataclass
class PannParams:
    """Trainable parameters plus the architecture they belong to.

    ``version`` is bumped by the calibration loop after each in-place
    update so that models can cache derived quantities against it.
    """

    W1: np.ndarray
    W2: np.ndarray
    b: np.ndarray
    symmetry: object
    mode: ConvexityMode
    version: int = 0

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=float)
        self.W2 = np.asarray(self.W2, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        n = invariant_count(self.symmetry, self.mode)
        if self.W1.ndim != 2 or self.W1.shape[1] != n:
            raise ConfigError(
                f"W1 must have shape (m, {n}) for this symmetry/mode, got {self.W1.shape}"
            )
        m = self.W1.shape[0]
        if self.W2.shape != (m,) or self.b.shape != (m,):
            raise ConfigError(f"W2 and b must have shape ({m},)")
        if self.mode is ConvexityMode.POLYCONVEX:
            if np.min(self.W1) < 0.0 or np.min(self.W2) < 0.0:
                raise ConfigError("polyconvex mode requires non-negative W1 and W2")

    @property
    def m(self):
        return self.W1.shape[0]

    @property
    def n(self):
        return self.W1.shape[1]

    def bump_version(self):
        self.version += 1

    def copy(self):
        return PannParams(
            self.W1.copy(), self.W2.copy(), self.b.copy(), self.symmetry, self.mode, self.version
        )


@dataclass
class NormalizationConstants:
    """Coefficients of the stress-normalization term.

    Isotropic models use only ``n_iso`` (the -J coefficient). Transversely
    isotropic models use ``o_ti`` for -J plus the ReLU-split pair
    (p_ti, q_ti) multiplying J1 and J2; exactly one of the pair is nonzero.
    """

    n_iso: float = 0.0
    o_ti: float = 0.0
    p_ti: float = 0.0
    q_ti: float = 0.0


def nn_potential(values, W1, W2, b, order=2):
    """Network potential W2 . SP(W1 . I + b) with derivatives in invariant space.

    Returns (value, grad, hess); grad/hess are None below the requested
    order. Softplus is evaluated as logaddexp(0, h) for stability; the
    gradient weights are the logistic function and its derivative.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (W1.shape[1],):
        raise ConfigError(f"invariant vector of length {values.shape} does not match W1 {W1.shape}")
    h = W1 @ values + b
    value = float(W2 @ np.logaddexp(0.0, h))
    if order < 1:
        return value, None, None
    s = expit(h)
    grad = (W2 * s) @ W1
    if order < 2:
        return value, grad, None
    hess = np.einsum("a,ai,aj->ij", W2 * s * (1.0 - s), W1, W1)
    hess = 0.5 * (hess + hess.T)  # exact symmetry regardless of summation order
    return value, grad, hess


def growth_term(J, order=2):
    """Volumetric growth term (J + 1/J - 2)^2 and its J-derivatives."""
    J = float(J)
    if J <= 0.0:
        raise InvalidDeformation(f"growth term needs J > 0, got {J:g}")
    u = J + 1.0 / J - 2.0
    up = 1.0 - 1.0 / J**2
    value = u * u
    if order < 1:
        return value, None, None
    dJ = 2.0 * u * up
    if order < 2:
        return value, dJ, None
    upp = 2.0 / J**3
    return value, dJ, 2.0 * up * up + 2.0 * u * upp


def _norm_weights(symmetry, mode):
    """Weight vectors turning the reference NN gradient into the constants.

    Returns (w, v): the -J coefficient is w . g0 (+ 2 ReLU(v . g0) for
    transverse isotropy) and the ReLU argument is v . g0; v is None for
    isotropy. Derivation: the reference stress of the invariant stack has
    an identity part and, for transverse isotropy, an N(x)N part, and the
    term's own contribution (-c J + p J1 + q J2) must cancel both exactly.
    """
    poly = mode is ConvexityMode.POLYCONVEX
    n = invariant_count(symmetry, mode)
    w = np.zeros(n)
    w[0] = 2.0
    w[1] = 4.0
    w[2] = 1.0
    if poly:
        w[6] = -1.0
    if isinstance(symmetry, Isotropic):
        return w, None
    base = 7 if poly else 6
    v = np.zeros(n)
    v[base + 0] = 1.0
    v[base + 1] = -1.0
    w[base + 1] = 2.0
    if poly:
        v[base + 3] = -1.0
        v[base + 4] = 1.0
        w[base + 3] = 2.0
        w[base + 4] = 2.0
    return w, v


def normalization_constants(params):
    """Constants of the stress-normalization term for the given parameters.

    Evaluated from the NN gradient at the reference state; derivatives with
    respect to invariants absent from the active set are implicitly zero
    because those invariants are simply not inputs.
    """
    ref = reference_invariants(params.symmetry, params.mode)
    _, g0, _ = nn_potential(ref, params.W1, params.W2, params.b, order=1)
    w, v = _norm_weights(params.symmetry, params.mode)
    if v is None:
        return NormalizationConstants(n_iso=float(w @ g0))
    x = float(v @ g0)
    q = max(x, 0.0)
    p = max(-x, 0.0)
    o = float(w @ g0) + 2.0 * q
    return NormalizationConstants(o_ti=o, p_ti=p, q_ti=q)


def stress_coefficients(consts, symmetry, mode):
    """Linear invariant-space coefficient vector of the normalization term."""
    n = invariant_count(symmetry, mode)
    s = np.zeros(n)
    if isinstance(symmetry, Isotropic):
        s[_J_IDX] = -consts.n_iso
    else:
        base = 7 if mode is ConvexityMode.POLYCONVEX else 6
        s[_J_IDX] = -consts.o_ti
        s[base + 0] = consts.p_ti
        s[base + 1] = consts.q_ti
    return s


class PannModel(InvariantEnergyModel):
    """PANN internal energy density e(F, d0)."""

    def __init__(self, params):
        self.params = params
        self._cache = (None, None, None)

    @property
    def symmetry(self):
        return self.params.symmetry

    @property
    def mode(self):
        return self.params.mode

    def constants(self):
        """Normalization constants, recomputed when the parameters change."""
        version, consts, coeffs = self._cache
        if version != self.params.version:
            consts = normalization_constants(self.params)
            coeffs = stress_coefficients(consts, self.symmetry, self.mode)
            self._cache = (self.params.version, consts, coeffs)
        return self._cache[1], self._cache[2]

    def potential_terms(self, values, order):
        p = self.params
        _, s = self.constants()
        v, g, H = nn_potential(values, p.W1, p.W2, p.b, order)
        gv, gd, gdd = growth_term(values[_J_IDX], order)
        value = v + gv + float(s @ values)
        if order < 1:
            return value, None, None
        grad = g + s
        grad[_J_IDX] += gd
        if order < 2:
            return value, grad, None
        hess = H.copy()
        hess[_J_IDX, _J_IDX] += gdd
        return value, grad, hess


def pann_energy(state, params, order=2):
    """Convenience wrapper evaluating a PannModel at one state."""
    return PannModel(params).energy(state, order)


def init_pann_params(symmetry, mode, hidden, rng):
    """Glorot-uniform initialization; polyconvex weights start from |draw|."""
    n = invariant_count(symmetry, mode)
    lim1 = np.sqrt(6.0 / (n + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 1))
    W1 = rng.uniform(-lim1, lim1, size=(hidden, n))
    W2 = rng.uniform(-lim2, lim2, size=hidden)
    b = np.zeros(hidden)
    if mode is ConvexityMode.POLYCONVEX:
        W1 = np.abs(W1)
        W2 = np.abs(W2)
    return PannParams(W1, W2, b, symmetry, mode)


_FORMAT_TAG = "pann-v1"


def _fmt(x):
    return f"{x:.17g}"


def save_pann(path, params):
    """Write parameters as a pann-v1 text document."""
    lines = [f"# {_FORMAT_TAG}"]
    lines.append(f"symmetry {params.symmetry.tag}")
    lines.append(f"mode {params.mode.value}")
    if isinstance(params.symmetry, TransverselyIsotropic):
        lines.append("direction " + " ".join(_fmt(x) for x in params.symmetry.normal))
    lines.append(f"hidden {params.m}")
    lines.append(f"inputs {params.n}")
    lines.append(f"ordering {ordering_tag(params.symmetry, params.mode)}")
    lines.append("W1")
    for row in params.W1:
        lines.append(" ".join(_fmt(x) for x in row))
    lines.append("W2")
    lines.append(" ".join(_fmt(x) for x in params.W2))
    lines.append("b")
    lines.append(" ".join(_fmt(x) for x in params.b))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pann(path):
    """Read a pann-v1 text document back into PannParams."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != f"# {_FORMAT_TAG}":
        raise ParseError(f"expected '# {_FORMAT_TAG}' header", line=1)
    fields = {}
    i = 1
    matrices = {}
    while i < len(raw):
        line = raw[i].strip()
        if not line:
            i += 1
            continue
        key = line.split()[0]
        if key in ("W1", "W2", "b"):
            m = int(fields.get("hidden", 0))
            rows = m if key == "W1" else 1
            block = []
            for r in range(rows):
                i += 1
                if i >= len(raw):
                    raise ParseError(f"truncated {key} block", line=i + 1)
                try:
                    block.append([float(tok) for tok in raw[i].split()])
                except ValueError as exc:
                    raise ParseError(f"bad float in {key}: {exc}", line=i + 1) from None
            matrices[key] = np.array(block[0]) if rows == 1 else np.array(block)
        else:
            fields[key] = line[len(key):].strip()
        i += 1
    try:
        mode = ConvexityMode(fields["mode"])
        if fields["symmetry"] == Isotropic.tag:
            sym = Isotropic()
        elif fields["symmetry"] == TransverselyIsotropic.tag:
            sym = TransverselyIsotropic([float(t) for t in fields["direction"].split()])
        else:
            raise ParseError(f"unknown symmetry {fields['symmetry']!r}")
        params = PannParams(matrices["W1"], matrices["W2"], matrices["b"], sym, mode)
    except KeyError as exc:
        raise ParseError(f"missing field {exc}") from None
    expected = ordering_tag(sym, mode)
    if fields.get("ordering", expected) != expected:
        raise ParseError(f"ordering tag {fields['ordering']!r} does not match {expected!r}")
    return params
