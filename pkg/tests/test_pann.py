import numpy as np
import pytest

from eepann.core import MaterialState
from eepann.errors import ConfigError, InvalidDeformation, ParseError
from eepann.invariants import ConvexityMode, Isotropic, TransverselyIsotropic
from eepann.pann import (
    PannModel,
    PannParams,
    growth_term,
    init_pann_params,
    load_pann,
    nn_potential,
    normalization_constants,
    save_pann,
)

from helpers import check_energy_derivatives, random_deformation, random_rotation, rel_err, rotation_about

N_TI = 0.5 * np.array([1.0, 1.0, np.sqrt(2.0)])

CONFIGS = [
    (Isotropic(), ConvexityMode.POLYCONVEX),
    (Isotropic(), ConvexityMode.UNCONSTRAINED),
    (TransverselyIsotropic(N_TI), ConvexityMode.POLYCONVEX),
    (TransverselyIsotropic(N_TI), ConvexityMode.UNCONSTRAINED),
]


def test_nn_potential_zero_output_layer():
    rng = np.random.default_rng(0)
    W1 = rng.standard_normal((4, 6))
    v, g, H = nn_potential(rng.standard_normal(6), W1, np.zeros(4), rng.standard_normal(4))
    assert v == 0.0 and np.all(g == 0.0) and np.all(H == 0.0)


def test_nn_potential_softplus_point():
    v, g, H = nn_potential(np.array([0.0]), np.array([[1.0]]), np.array([1.0]), np.array([0.0]))
    assert abs(v - np.log(2.0)) < 1e-15
    assert abs(g[0] - 0.5) < 1e-15
    assert abs(H[0, 0] - 0.25) < 1e-15


def test_nn_potential_hessian_psd_nonneg_weights():
    rng = np.random.default_rng(1)
    for _ in range(100):
        m, n = 8, 7
        W1 = np.abs(rng.standard_normal((m, n)))
        W2 = np.abs(rng.standard_normal(m))
        b = rng.standard_normal(m)
        _, _, H = nn_potential(rng.standard_normal(n), W1, W2, b)
        assert np.max(np.abs(H - H.T)) == 0.0
        assert np.linalg.eigvalsh(H).min() >= -1e-10


def test_nn_potential_dimension_mismatch():
    with pytest.raises(ConfigError):
        nn_potential(np.zeros(3), np.zeros((2, 4)), np.zeros(2), np.zeros(2))


def test_growth_term():
    v, dJ, d2J = growth_term(1.0)
    assert v == 0.0 and dJ == 0.0 and d2J == 0.0
    v, _, _ = growth_term(2.0)
    assert abs(v - 0.25) < 1e-15
    with pytest.raises(InvalidDeformation):
        growth_term(0.0)
    # unbounded growth under compression
    seq = [growth_term(J)[0] for J in (0.5, 0.1, 0.01, 1e-4)]
    assert all(b > a for a, b in zip(seq, seq[1:]))
    assert seq[-1] > 1e7


@pytest.mark.parametrize("sym,mode", CONFIGS)
def test_normalization_conditions(sym, mode):
    rng = np.random.default_rng(7)
    ref = MaterialState(np.eye(3), np.zeros(3))
    for _ in range(50):
        params = init_pann_params(sym, mode, 8, rng)
        out = PannModel(params).energy(ref, order=1)
        assert np.max(np.abs(out.P)) <= 1e-10
        assert np.max(np.abs(out.e0)) <= 1e-10


def test_constants_zero_network():
    params = PannParams(np.zeros((4, 7)), np.zeros(4), np.zeros(4), Isotropic(), ConvexityMode.POLYCONVEX)
    c = normalization_constants(params)
    assert c.n_iso == 0.0 and c.o_ti == 0.0 and c.p_ti == 0.0 and c.q_ti == 0.0


def test_constants_relu_split():
    rng = np.random.default_rng(11)
    sym = TransverselyIsotropic(N_TI)
    for mode in (ConvexityMode.POLYCONVEX, ConvexityMode.UNCONSTRAINED):
        for _ in range(25):
            c = normalization_constants(init_pann_params(sym, mode, 8, rng))
            assert c.p_ti >= 0.0 and c.q_ti >= 0.0
            assert c.p_ti * c.q_ti == 0.0


@pytest.mark.parametrize("sym,mode", CONFIGS)
def test_energy_derivatives_match_fd(sym, mode):
    rng = np.random.default_rng(13)
    model = PannModel(init_pann_params(sym, mode, 8, rng))
    for _ in range(5):
        F = random_deformation(rng)
        d0 = 0.6 * rng.standard_normal(3)
        check_energy_derivatives(model, F, d0)


def test_objectivity_and_material_symmetry():
    rng = np.random.default_rng(17)
    sym = TransverselyIsotropic(N_TI)
    model = PannModel(init_pann_params(sym, ConvexityMode.POLYCONVEX, 8, rng))
    F = random_deformation(rng)
    d0 = 0.5 * rng.standard_normal(3)
    e_ref = model.energy(MaterialState(F, d0), order=0).e
    for _ in range(20):
        Q = random_rotation(rng)
        assert abs(model.energy(MaterialState(Q @ F, d0), 0).e - e_ref) <= 1e-10 * max(1, abs(e_ref))
    for angle in np.linspace(0.3, 5.9, 7):
        Q = rotation_about(N_TI, angle)
        e_rot = model.energy(MaterialState(F @ Q, Q.T @ d0), 0).e
        assert abs(e_rot - e_ref) <= 1e-10 * max(1, abs(e_ref))


def test_second_derivative_symmetries():
    rng = np.random.default_rng(19)
    model = PannModel(init_pann_params(TransverselyIsotropic(N_TI), ConvexityMode.UNCONSTRAINED, 8, rng))
    out = model.energy(MaterialState(random_deformation(rng), 0.4 * rng.standard_normal(3)), order=2)
    A = out.d2_FF
    assert np.max(np.abs(A - A.transpose(2, 3, 0, 1))) < 1e-10
    S = out.d2_d0d0
    assert np.max(np.abs(S - S.T)) < 1e-12


def test_polyconvex_requires_nonneg_weights():
    with pytest.raises(ConfigError):
        PannParams(-np.ones((2, 7)), np.ones(2), np.zeros(2), Isotropic(), ConvexityMode.POLYCONVEX)
    # width must match the invariant count
    with pytest.raises(ConfigError):
        PannParams(np.ones((2, 6)), np.ones(2), np.zeros(2), Isotropic(), ConvexityMode.POLYCONVEX)


def test_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(23)
    for sym, mode in CONFIGS:
        params = init_pann_params(sym, mode, 8, rng)
        path = tmp_path / f"{sym.tag}-{mode.value}.txt"
        save_pann(path, params)
        back = load_pann(path)
        assert np.array_equal(back.W1, params.W1)
        assert np.array_equal(back.W2, params.W2)
        assert np.array_equal(back.b, params.b)
        assert back.mode is params.mode
        assert back.symmetry == params.symmetry


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# something-else\n")
    with pytest.raises(ParseError):
        load_pann(path)


def test_constants_cache_tracks_version():
    rng = np.random.default_rng(29)
    params = init_pann_params(Isotropic(), ConvexityMode.POLYCONVEX, 8, rng)
    model = PannModel(params)
    c1, _ = model.constants()
    params.W2 *= 2.0
    params.bump_version()
    c2, _ = model.constants()
    assert c2.n_iso == pytest.approx(2.0 * c1.n_iso, rel=1e-12)
    # normalization still exact after the update
    out = model.energy(MaterialState(np.eye(3), np.zeros(3)), order=1)
    assert np.max(np.abs(out.P)) <= 1e-10
