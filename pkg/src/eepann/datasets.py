"""Concentric load-state sampling, model evaluation, and dataset file I/O.

Deformation gradients are sampled as matrix exponentials of amplitude-scaled
unit deviatoric directions: a 5-dimensional unit vector maps through a fixed
orthonormal (Frobenius) basis of traceless symmetric tensors, so every
sample satisfies det F = 1 up to rounding. Each deviatoric direction gets
one random unit direction for d0, combined with linearly spaced amplitudes
for both F and d0.

Dataset files are line-oriented UTF-8 text ("eedata-v1"): '#'-prefixed
header lines carry the format tag, seed, plan counts, and scale factors;
each record line holds 24 floats (F row-major, d0, P row-major, e0) plus an
integer ellipticity flag (1 elliptic, 0 not, -1 unknown).
"""

import logging
from dataclasses import dataclass

import numpy as np

from .core import MaterialState
from .errors import EepannError, ParseError
from .tensors import as_tensor2, as_vector3

__all__ = [
    "SamplingPlan",
    "DataRecord",
    "sample_states",
    "build_dataset",
    "write_dataset",
    "read_dataset",
]

log = logging.getLogger(__name__)

# orthonormal basis of traceless symmetric 3x3 tensors (Frobenius inner product)
_S2 = 1.0 / np.sqrt(2.0)
_S6 = 1.0 / np.sqrt(6.0)
DEV_BASIS = np.array(
    [
        np.diag([1.0, -1.0, 0.0]) * _S2,
        np.diag([1.0, 1.0, -2.0]) * _S6,
        [[0.0, _S2, 0.0], [_S2, 0.0, 0.0], [0.0, 0.0, 0.0]],
        [[0.0, 0.0, _S2], [0.0, 0.0, 0.0], [_S2, 0.0, 0.0]],
        [[0.0, 0.0, 0.0], [0.0, 0.0, _S2], [0.0, _S2, 0.0]],
    ]
)


@dataclass
class SamplingPlan:
    n_dirs: int
    n_amps: int
    n_d0_amps: int
    amp_max: float = 1.0
    d0_max: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if min(self.n_dirs, self.n_amps, self.n_d0_amps) < 1:
            raise ValueError("all sampling counts must be >= 1")
        if self.amp_max <= 0 or self.d0_max <= 0:
            raise ValueError("amp_max and d0_max must be positive")

    @property
    def n_states(self):
        return self.n_dirs * self.n_amps * self.n_d0_amps


@dataclass
class DataRecord:
    """One sample (F, d0; P, e0); ``elliptic`` is None when not checked."""

    F: np.ndarray
    d0: np.ndarray
    P: np.ndarray
    e0: np.ndarray
    elliptic: bool = None

    def __post_init__(self):
        self.F = as_tensor2(self.F)
        self.d0 = as_vector3(self.d0)
        self.P = as_tensor2(self.P)
        self.e0 = as_vector3(self.e0)


def _unit_rows(rng, count, dim):
    out = np.empty((count, dim))
    for i in range(count):
        v = rng.standard_normal(dim)
        while np.linalg.norm(v) < 1e-12:
            v = rng.standard_normal(dim)
        out[i] = v / np.linalg.norm(v)
    return out


def _expm_symmetric(D):
    lam, R = np.linalg.eigh(D)
    lam = lam - lam.mean()  # exact traceless projection keeps det F at 1
    return (R * np.exp(lam)) @ R.T


def sample_states(plan):
    """Generate the concentric list of (F, d0) load states.

    Deterministic under the plan's seed (counter-based generator). Order is
    direction-major, then F amplitude, then d0 amplitude, so records stay
    grouped per direction with strictly increasing amplitudes.
    """
    rng = np.random.Generator(np.random.Philox(plan.seed))
    dirs5 = _unit_rows(rng, plan.n_dirs, 5)
    d0_dirs = _unit_rows(rng, plan.n_dirs, 3)
    amps = plan.amp_max * np.arange(1, plan.n_amps + 1) / plan.n_amps
    d0_amps = plan.d0_max * np.arange(1, plan.n_d0_amps + 1) / plan.n_d0_amps

    states = []
    for i in range(plan.n_dirs):
        D = np.einsum("k,kij->ij", dirs5[i], DEV_BASIS)
        for a in amps:
            F = _expm_symmetric(a * D)
            for da in d0_amps:
                states.append((F, da * d0_dirs[i]))
    return states


def build_dataset(states, model, check_ellipticity=False, grid=None, mu_ref=1.0, eps_ref=1.0):
    """Evaluate a ground-truth model on the states and return DataRecords.

    Stresses are divided by mu_ref, d0 by sqrt(mu_ref * eps_ref), and e0 by
    sqrt(mu_ref / eps_ref); with the default unit references this is the
    identity. States where the model fails are skipped with a logged reason.
    When ``check_ellipticity`` is set, an acoustic-tensor scan over ``grid``
    (default 64x32) sets the elliptic flag of every record.
    """
    if check_ellipticity:
        from .stability import SphericalGrid, ellipticity_scan

        grid = grid or SphericalGrid(64, 32)

    sP = 1.0 / mu_ref
    sd = 1.0 / np.sqrt(mu_ref * eps_ref)
    se = 1.0 / np.sqrt(mu_ref / eps_ref)

    records = []
    skipped = 0
    for k, (F, d0) in enumerate(states):
        try:
            state = MaterialState(F, d0)
            out = model.energy(state, order=2 if check_ellipticity else 1)
            flag = None
            if check_ellipticity:
                flag = bool(ellipticity_scan(model, state, grid, output=out).elliptic)
            records.append(DataRecord(F, sd * d0, sP * out.P, se * out.e0, elliptic=flag))
        except EepannError as exc:
            skipped += 1
            log.warning("skipping state %d: %s", k, exc)
    if skipped:
        log.warning("skipped %d of %d states", skipped, len(states))
    return records


def _fmt(x):
    return f"{x:.17g}"


def write_dataset(path, records, plan=None, mu_ref=1.0, eps_ref=1.0):
    """Write records as an eedata-v1 text file; round trip is bit exact."""
    lines = ["# eedata-v1"]
    if plan is not None:
        lines.append(f"# seed {plan.seed}")
        lines.append(f"# plan {plan.n_dirs} {plan.n_amps} {plan.n_d0_amps}")
        lines.append(f"# ranges {_fmt(plan.amp_max)} {_fmt(plan.d0_max)}")
    lines.append(f"# scale {_fmt(mu_ref)} {_fmt(eps_ref)}")
    lines.append("# columns F(9) d0(3) P(9) e0(3) elliptic")
    for r in records:
        nums = np.concatenate([r.F.ravel(), r.d0, r.P.ravel(), r.e0])
        flag = -1 if r.elliptic is None else int(r.elliptic)
        lines.append(" ".join(_fmt(x) for x in nums) + f" {flag}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_dataset(path):
    """Read an eedata-v1 file; returns (records, header dict)."""
    records = []
    header = {"mu_ref": 1.0, "eps_ref": 1.0}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if lineno == 1:
                    if line != "# eedata-v1":
                        raise ParseError("expected '# eedata-v1' header", line=lineno)
                    continue
                toks = line[1:].split()
                if toks and toks[0] == "seed":
                    header["seed"] = int(toks[1])
                elif toks and toks[0] == "plan":
                    header["plan"] = tuple(int(t) for t in toks[1:4])
                elif toks and toks[0] == "ranges":
                    header["amp_max"], header["d0_max"] = (float(t) for t in toks[1:3])
                elif toks and toks[0] == "scale":
                    header["mu_ref"], header["eps_ref"] = (float(t) for t in toks[1:3])
                continue
            toks = line.split()
            if len(toks) != 25:
                raise ParseError(f"expected 25 fields, got {len(toks)}", line=lineno)
            try:
                nums = np.array([float(t) for t in toks[:24]])
                flag = int(toks[24])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if flag not in (-1, 0, 1):
                raise ParseError(f"elliptic flag must be -1, 0, or 1, got {flag}", line=lineno)
            records.append(
                DataRecord(
                    nums[0:9].reshape(3, 3),
                    nums[9:12],
                    nums[12:21].reshape(3, 3),
                    nums[21:24],
                    elliptic=None if flag == -1 else bool(flag),
                )
            )
    return records, header
