import numpy as np
import pytest

from eepann.core import EnergyOutput, EnergyModel, MaterialState
from eepann.errors import LegendreFailure
from eepann.ground_truth import MooneyRivlin
from eepann.invariants import ConvexityMode, TransverselyIsotropic
from eepann.legendre import free_energy, solve_d0
from eepann.pann import PannModel, init_pann_params

from helpers import central2, random_deformation, rel_err

N_TI = 0.5 * np.array([1.0, 1.0, np.sqrt(2.0)])


def models():
    rng = np.random.default_rng(1)
    return [
        MooneyRivlin(),
        PannModel(init_pann_params(TransverselyIsotropic(N_TI), ConvexityMode.POLYCONVEX, 8, rng)),
    ]


def test_identity_solution_is_linear_in_field():
    # ideal dielectric at the reference: d0 equals the prescribed field
    mr = MooneyRivlin()
    for e3 in (0.1, 0.4, 0.9):
        d0 = solve_d0(mr, np.eye(3), np.array([0.0, 0.0, e3]))
        assert np.allclose(d0, [0.0, 0.0, e3], atol=1e-12)


def test_zero_field_gives_zero_displacement():
    for model in models():
        d0 = solve_d0(model, np.eye(3), np.zeros(3))
        assert np.max(np.abs(d0)) <= 1e-12


def test_round_trip():
    rng = np.random.default_rng(2)
    for model in models():
        for _ in range(10):
            F = random_deformation(rng)
            d0 = 0.5 * rng.standard_normal(3)
            e0 = model.energy(MaterialState(F, d0), order=1).e0
            back = solve_d0(model, F, e0)
            assert np.max(np.abs(back - d0)) < 1e-10


def test_duality_identity():
    rng = np.random.default_rng(3)
    for model in models():
        F = random_deformation(rng)
        e0 = 0.5 * rng.standard_normal(3)
        fe = free_energy(model, F, e0)
        internal = model.energy(MaterialState(F, fe.d0), order=0).e
        assert abs(fe.psi + fe.d0 @ e0 - internal) <= 1e-12


def test_reference_free_energy():
    mr = MooneyRivlin()
    fe = free_energy(mr, np.eye(3), np.zeros(3))
    assert np.max(np.abs(fe.P)) == 0.0
    assert np.max(np.abs(fe.d0)) == 0.0
    assert fe.psi == pytest.approx(1.5, abs=1e-15)
    # dielectric tensor at the MR reference is the identity
    assert rel_err(fe.d2_ee, np.eye(3)) < 1e-14


def test_blocks_match_finite_differences():
    rng = np.random.default_rng(4)
    h = 1e-5
    for model in models():
        F = random_deformation(rng)
        e0 = 0.4 * rng.standard_normal(3)
        fe = free_energy(model, F, e0)
        # dP/de0 (piezoelectric block) and dd0/de0 (dielectric block)
        for k in range(3):

            def P_of(t, k=k):
                e = e0.copy()
                e[k] += t
                return free_energy(model, F, e).P

            def d_of(t, k=k):
                e = e0.copy()
                e[k] += t
                return free_energy(model, F, e).d0

            assert rel_err(central2(P_of, h), fe.d2_Fe[:, :, k]) < 1e-5
            assert rel_err(central2(d_of, h), fe.d2_ee[:, k]) < 1e-5
        # dP/dF at fixed e0
        worst = 0.0
        for a in range(3):
            for b in range(3):

                def P_F(t, a=a, b=b):
                    Fp = F.copy()
                    Fp[a, b] += t
                    return free_energy(model, Fp, e0).P

                worst = max(worst, rel_err(central2(P_F, h), fe.d2_FF[:, :, a, b]))
        assert worst < 1e-5


def test_monotone_map_positive_definite():
    rng = np.random.default_rng(5)
    for model in models():
        for _ in range(10):
            F = random_deformation(rng)
            d0 = 0.6 * rng.standard_normal(3)
            S = model.energy(MaterialState(F, d0), order=2).d2_d0d0
            np.linalg.cholesky(S)  # raises if not positive definite


class _DegenerateModel(EnergyModel):
    """No electric stiffness at all: the displacement solve must fail."""

    def energy(self, state, order=2):
        return EnergyOutput(
            e=0.0,
            P=np.zeros((3, 3)),
            e0=np.zeros(3),
            d2_FF=np.zeros((3, 3, 3, 3)),
            d2_Fd0=np.zeros((3, 3, 3)),
            d2_d0d0=np.zeros((3, 3)),
        )


def test_singular_dielectric_block_raises():
    with pytest.raises(LegendreFailure) as exc:
        solve_d0(_DegenerateModel(), np.eye(3), np.array([0.0, 0.0, 1.0]))
    assert exc.value.singular


def test_warm_start_accepted():
    mr = MooneyRivlin()
    e0 = np.array([0.0, 0.0, 0.5])
    cold = solve_d0(mr, np.eye(3), e0)
    warm = solve_d0(mr, np.eye(3), e0, guess=cold)
    assert np.allclose(cold, warm, atol=1e-12)
