import numpy as np
import pytest

from eepann.core import EnergyModel, MaterialState
from eepann.errors import StabilityError
from eepann.ground_truth import HomogenizedLaminate, LaminateParams, MooneyRivlin, MooneyRivlinParams
from eepann.invariants import ConvexityMode, Isotropic
from eepann.pann import PannModel, init_pann_params
from eepann.stability import (
    SphericalGrid,
    acoustic_tensor,
    ellipticity_scan,
    moduli_scan,
    spherical_directions,
    write_scan,
)

from helpers import random_deformation, rel_err


def test_grid_covers_ranges_inclusively():
    grid = SphericalGrid(5, 4)
    nodes = grid.nodes
    assert nodes.shape == (20, 2)
    assert nodes[:, 0].min() == 0.0 and nodes[:, 0].max() == 2 * np.pi
    assert nodes[:, 1].min() == 0.0 and nodes[:, 1].max() == np.pi
    V = spherical_directions(nodes)
    assert np.allclose(np.linalg.norm(V, axis=1), 1.0, atol=1e-14)


def test_mr_identity_positive_definite():
    mr = MooneyRivlin()
    state = MaterialState(np.eye(3), np.zeros(3))
    rng = np.random.default_rng(0)
    for _ in range(10):
        V = rng.standard_normal(3)
        V /= np.linalg.norm(V)
        Q = acoustic_tensor(mr, state, V)
        assert np.linalg.eigvalsh(Q).min() > 0.0


def test_direction_sign_symmetry():
    mr = MooneyRivlin()
    state = MaterialState(np.diag([1.2, 1.0, 1 / 1.2]), np.array([0.1, 0.0, 0.4]))
    V = np.array([0.3, -0.5, 0.81])
    V /= np.linalg.norm(V)
    assert np.allclose(acoustic_tensor(mr, state, V), acoustic_tensor(mr, state, -V), atol=1e-14)


class _Decoupled(EnergyModel):
    """Mooney-Rivlin output with the piezoelectric block zeroed."""

    def __init__(self):
        self.inner = MooneyRivlin()

    def energy(self, state, order=2):
        out = self.inner.energy(state, order)
        if order >= 2:
            out.d2_Fd0 = np.zeros((3, 3, 3))
        return out


def test_decoupled_limit_reduces_to_mechanical_tensor():
    model = _Decoupled()
    state = MaterialState(np.diag([1.3, 0.9, 1.0 / 1.17]), np.zeros(3))
    out = model.energy(state, order=2)
    V = np.array([0.6, 0.0, 0.8])
    Q = acoustic_tensor(model, state, V)
    Q_mech = np.einsum("iIjJ,I,J->ij", out.d2_FF, V, V)
    assert rel_err(Q, Q_mech) < 1e-13


def test_elliptic_verdict_at_identity():
    res = ellipticity_scan(MooneyRivlin(), MaterialState(np.eye(3), np.zeros(3)))
    assert res.elliptic
    assert res.min_least_minor > 0.0


def test_degenerate_single_meridian_grid():
    res = ellipticity_scan(
        MooneyRivlin(), MaterialState(np.eye(3), np.zeros(3)), SphericalGrid(1, 8)
    )
    assert res.elliptic


def test_scan_refinement_stable():
    mr = MooneyRivlin()
    state = MaterialState(np.diag([1.5, 1.0, 1 / 1.5]), np.array([0.2, 0.1, 0.8]))
    a = ellipticity_scan(mr, state, SphericalGrid(64, 32))
    b = ellipticity_scan(mr, state, SphericalGrid(96, 48))
    assert abs(a.min_eigenvalue - b.min_eigenvalue) < 1e-6 * max(1, abs(a.min_eigenvalue))


def test_polyconvex_pann_elliptic_in_range():
    rng = np.random.default_rng(1)
    model = PannModel(init_pann_params(Isotropic(), ConvexityMode.POLYCONVEX, 8, rng))
    for _ in range(10):
        state = MaterialState(random_deformation(rng), 0.5 * rng.standard_normal(3))
        res = ellipticity_scan(model, state, SphericalGrid(32, 16))
        assert res.min_eigenvalue >= -1e-9


def test_laminate_loses_ellipticity_at_large_electric_load():
    hom = HomogenizedLaminate(LaminateParams(MooneyRivlinParams()))
    mild = ellipticity_scan(hom, MaterialState(np.eye(3), np.array([0.0, 0.0, 0.5])))
    assert mild.elliptic
    harsh = ellipticity_scan(hom, MaterialState(np.eye(3), 3.8 * hom.params.normal))
    assert not harsh.elliptic
    assert harsh.min_least_minor < 0.0


def test_moduli_reference_values():
    mr = MooneyRivlin()
    nodes, mu, q, theta = moduli_scan(mr, MaterialState(np.eye(3), np.zeros(3)))
    assert np.allclose(theta, 1.0, atol=1e-12)  # dielectric block is the identity
    assert np.max(np.abs(q)) == 0.0  # no coupling at the reference state
    assert np.all(mu > 0.0)


def test_moduli_parity():
    mr = MooneyRivlin()
    state = MaterialState(np.diag([1.4, 1.0, 1 / 1.4]), np.array([0.3, 0.2, 0.6]))
    out = mr.energy(state, order=2)
    rng = np.random.default_rng(2)
    e = rng.standard_normal(3)
    e /= np.linalg.norm(e)
    mu_p = np.einsum("iIjJ,i,I,j,J->", out.d2_FF, e, e, e, e)
    mu_m = np.einsum("iIjJ,i,I,j,J->", out.d2_FF, -e, -e, -e, -e)
    assert mu_p == mu_m


def test_order2_required():
    mr = MooneyRivlin()
    out = mr.energy(MaterialState(np.eye(3), np.zeros(3)), order=1)
    with pytest.raises(StabilityError):
        from eepann.stability import acoustic_tensors_on_grid

        acoustic_tensors_on_grid(out, np.array([[0.0, 0.0, 1.0]]))


def test_scan_export(tmp_path):
    path = tmp_path / "scan.txt"
    write_scan(path, MooneyRivlin(), MaterialState(np.eye(3), np.zeros(3)), SphericalGrid(8, 4))
    lines = path.read_text().splitlines()
    assert lines[0] == "# eescan-v1"
    assert len(lines) == 2 + 8 * 4
    row = [float(t) for t in lines[2].split()]
    assert len(row) == 7
