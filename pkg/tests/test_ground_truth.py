import numpy as np
import pytest

from eepann.core import MaterialState
from eepann.errors import ConfigError, HomogenizationFailure
from eepann.ground_truth import (
    HomogenizedLaminate,
    LaminateParams,
    LaminatePhase,
    MooneyRivlin,
    MooneyRivlinParams,
    mr_energy,
)
from eepann.tensors import cof3, det3

from helpers import check_energy_derivatives, random_deformation, random_rotation, rel_err


def lam_params(**kw):
    return LaminateParams(MooneyRivlinParams(), **kw)


def test_mr_reference_state():
    out = mr_energy(MaterialState(np.eye(3), np.zeros(3)), MooneyRivlinParams())
    assert out.e == pytest.approx(1.5, abs=1e-15)
    assert np.max(np.abs(out.P)) == 0.0
    assert np.max(np.abs(out.e0)) == 0.0


def test_mr_electric_field_at_identity():
    out = mr_energy(MaterialState(np.eye(3), np.array([0.0, 0.0, 0.3])), MooneyRivlinParams())
    assert np.allclose(out.e0, [0.0, 0.0, 0.3], atol=1e-15)


def test_mr_parameter_validation():
    with pytest.raises(ConfigError):
        MooneyRivlinParams(mu1=-1.0)
    with pytest.raises(ConfigError):
        MooneyRivlinParams(lam=-0.1)


def test_mr_derivatives_fd():
    rng = np.random.default_rng(3)
    model = MooneyRivlin()
    for _ in range(5):
        check_energy_derivatives(model, random_deformation(rng), 0.5 * rng.standard_normal(3))


def test_phase_normalization():
    p = lam_params()
    for phase in ("a", "b"):
        out = LaminatePhase(phase, p).energy(MaterialState(np.eye(3), np.zeros(3)), order=1)
        assert np.max(np.abs(out.P)) == 0.0
        assert np.max(np.abs(out.e0)) == 0.0


def test_phase_b_permittivity_contrast():
    out = LaminatePhase("b", lam_params()).energy(
        MaterialState(np.eye(3), np.array([0.0, 0.0, 1.0])), order=1
    )
    assert np.allclose(out.e0, [0.0, 0.0, 0.5], atol=1e-15)


def test_phase_tag_validation():
    with pytest.raises(ConfigError):
        LaminatePhase("c", lam_params())


def test_laminate_param_validation():
    with pytest.raises(ConfigError):
        lam_params(c_a=0.0)
    with pytest.raises(ConfigError):
        lam_params(normal=np.array([1.0, 1.0, 0.0]))


def test_identical_phases_reduce_to_matrix_material():
    rng = np.random.default_rng(5)
    hom = HomogenizedLaminate(lam_params(f_m=1.0, f_e=1.0))
    mr = MooneyRivlin()
    for _ in range(5):
        st = MaterialState(random_deformation(rng), 0.4 * rng.standard_normal(3))
        oh = hom.energy(st, order=2)
        om = mr.energy(st, order=2)
        assert abs(oh.e - om.e) < 1e-12
        assert np.max(np.abs(oh.info["jumps"])) < 1e-12
        assert rel_err(oh.P, om.P) < 1e-11
        assert rel_err(oh.d2_FF, om.d2_FF) < 1e-9


def test_laminate_reference_state():
    out = HomogenizedLaminate(lam_params()).energy(MaterialState(np.eye(3), np.zeros(3)), order=1)
    assert np.max(np.abs(out.P)) == 0.0
    assert np.max(np.abs(out.e0)) == 0.0
    assert np.max(np.abs(out.info["jumps"])) == 0.0


def test_homogenized_derivatives_fd():
    rng = np.random.default_rng(7)
    hom = HomogenizedLaminate(lam_params())
    for _ in range(3):
        check_energy_derivatives(hom, random_deformation(rng, spread=0.15), 0.3 * rng.standard_normal(3))


def test_averaging_identity_exact():
    rng = np.random.default_rng(9)
    p = lam_params()
    hom = HomogenizedLaminate(p)
    F = random_deformation(rng, spread=0.2)
    d0 = 0.3 * rng.standard_normal(3)
    out = hom.energy(MaterialState(F, d0), order=0)
    Fa, Fb, da, db = hom._phase_states(F, d0, out.info["jumps"])
    assert np.max(np.abs(p.c_a * Fa + (1 - p.c_a) * Fb - F)) < 1e-15
    assert np.max(np.abs(p.c_a * da + (1 - p.c_a) * db - d0)) < 1e-15


def test_tangential_jump_constraint():
    rng = np.random.default_rng(10)
    p = lam_params()
    hom = HomogenizedLaminate(p)
    F = random_deformation(rng, spread=0.2)
    d0 = 0.4 * rng.standard_normal(3)
    out = hom.energy(MaterialState(F, d0), order=0)
    _, _, da, db = hom._phase_states(F, d0, out.info["jumps"])
    assert abs((da - db) @ p.normal) < 1e-14


def test_objectivity():
    rng = np.random.default_rng(11)
    hom = HomogenizedLaminate(lam_params())
    F = random_deformation(rng, spread=0.2)
    d0 = 0.3 * rng.standard_normal(3)
    e_ref = hom.energy(MaterialState(F, d0), order=0).e
    for _ in range(5):
        Q = random_rotation(rng)
        e_rot = hom.energy(MaterialState(Q @ F, d0), order=0).e
        assert abs(e_rot - e_ref) <= 1e-9 * max(1.0, abs(e_ref))


def test_voigt_bound():
    rng = np.random.default_rng(13)
    hom = HomogenizedLaminate(lam_params())
    for _ in range(10):
        F = random_deformation(rng, spread=0.2)
        d0 = 0.3 * rng.standard_normal(3)
        e_hom = hom.energy(MaterialState(F, d0), order=0).e
        zero_jump, _, _ = hom._inner_value(F, d0, np.zeros(5))
        assert e_hom <= zero_jump + 1e-12


def _phase_energy_grid(F_batch, d0_batch, mu1, mu2, lam, eps_eff, f_m=1.0):
    """Independent vectorized evaluation of the phase energy for the oracle."""
    I1 = np.sum(F_batch * F_batch, axis=(-2, -1))
    H = cof3(F_batch)
    I2 = np.sum(H * H, axis=(-2, -1))
    J = det3(F_batch)
    d = np.einsum("...iI,...I->...i", F_batch, d0_batch)
    I5 = np.sum(d * d, axis=-1)
    mech = 0.5 * mu1 * I1 + 0.5 * mu2 * I2 - (mu1 + 2 * mu2) * np.log(J) + 0.5 * lam * (J - 1) ** 2
    return f_m * mech + I5 / (2.0 * eps_eff * J)


def test_against_grid_search_oracle():
    # brute-force nested grid search over the jumps, refined to spacing 1e-4
    rng = np.random.default_rng(15)
    p = lam_params()
    hom = HomogenizedLaminate(p)
    N = p.normal
    T = np.stack([hom._t1, hom._t2], axis=1)
    ca, cb = p.c_a, 1.0 - p.c_a

    for _ in range(3):
        F = np.eye(3) + 0.2 * (rng.random((3, 3)) - 0.5)
        while np.linalg.det(F) < 0.5:
            F = np.eye(3) + 0.2 * (rng.random((3, 3)) - 0.5)
        d0 = 0.3 * rng.standard_normal(3)
        e_hom = hom.energy(MaterialState(F, d0), order=0).e

        center = np.zeros(5)
        span = 1.0
        npts = 7
        while span / (npts - 1) > 1e-4 / 4:
            axes = [np.linspace(c - span, c + span, npts) for c in center]
            grids = np.meshgrid(*axes, indexing="ij")
            Y = np.stack([g.ravel() for g in grids], axis=1)  # (K, 5)
            alpha = Y[:, :3]
            beta = Y[:, 3:] @ T.T
            Fa = F + cb * alpha[:, :, None] * N[None, None, :]
            Fb = F - ca * alpha[:, :, None] * N[None, None, :]
            da = d0 + cb * beta
            db = d0 - ca * beta
            Ja, Jb = det3(Fa), det3(Fb)
            vals = np.full(Y.shape[0], np.inf)
            ok = (Ja > 1e-6) & (Jb > 1e-6)
            vals[ok] = ca * _phase_energy_grid(Fa[ok], da[ok], 0.5, 0.5, 5.0, 1.0) + cb * _phase_energy_grid(
                Fb[ok], db[ok], 0.5, 0.5, 5.0, 2.0, f_m=2.0
            )
            best = int(np.argmin(vals))
            center = Y[best]
            span /= 3.0
        e_grid = float(np.min(vals))
        assert abs(e_hom - e_grid) < 1e-6


def test_inner_failure_reports_residual():
    hom = HomogenizedLaminate(lam_params())
    hom.max_iter = 1
    with pytest.raises(HomogenizationFailure) as exc:
        hom.energy(MaterialState(np.diag([1.6, 0.9, 0.7]), np.array([0.4, 0.2, 1.2])), order=0)
    assert exc.value.residual_norm is not None and exc.value.residual_norm > 0


def test_indefinite_inner_hessian_is_reported():
    # large electric load drives the inner problem indefinite (ellipticity loss candidate)
    hom = HomogenizedLaminate(lam_params())
    out = hom.energy(MaterialState(np.eye(3), np.zeros(3)), order=0)
    assert out.info["inner_hessian_indefinite"] is False
    assert "inner_hessian_min_eig" in out.info
