import numpy as np
import pytest
from scipy.special import sph_harm_y

from octomembrane.fuzzy import (BandLimitError, MatrixConfiguration, bracket_deviation,
                                coordinate_matrices, fuzzy_map, fuzzy_map_configuration, hs_norm,
                                matrix_bracket, spin_matrices, tensor_operator)
from octomembrane.surface import (FieldConfiguration, SurfaceField, SurfaceGrid, random_band_limited,
                                  real_harmonic_basis, sphere_harmonics_l1)

GRID = SurfaceGrid.sphere(16)


def _field(values):
    return SurfaceField(GRID, values)


def test_spin_algebra():
    for n in (2, 3, 6):
        j1, j2, j3 = spin_matrices(n)
        assert np.allclose(j1 @ j2 - j2 @ j1, 1j * j3)
        s = (n - 1) / 2
        assert np.allclose(j1 @ j1 + j2 @ j2 + j3 @ j3, s * (s + 1) * np.eye(n))


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_coordinates_map_to_spin_generators(n):
    f = sphere_harmonics_l1(GRID)
    x = coordinate_matrices(n)
    for i in range(3):
        assert np.allclose(fuzzy_map(_field(f[i]), n), x[i], atol=1e-12)


@pytest.mark.parametrize("n", [4, 8, 16, 32])
def test_l1_sector_is_exact(n):
    f1, f2, f3 = (_field(v) for v in sphere_harmonics_l1(GRID))
    assert bracket_deviation(f1, f2, n) < 1e-10
    assert bracket_deviation(f3, f1, n) < 1e-10


def test_tensor_operators_are_traceless_and_orthogonal():
    n = 6
    ops = {(l, m): tensor_operator(n, l, m) for l in range(1, 4) for m in range(-l, l + 1)}
    for op in ops.values():
        assert abs(np.trace(op)) < 1e-12
    keys = list(ops)
    gram = np.array([[np.trace(ops[a].conj().T @ ops[b]) for b in keys] for a in keys])
    assert np.allclose(gram - np.diag(np.diag(gram)), 0, atol=1e-10)


def test_map_is_linear_and_hermitian_on_real_fields():
    rng = np.random.default_rng(0)
    a, b = random_band_limited(GRID, 2, rng, lmax=3)
    ma, mb = fuzzy_map(_field(a), 8), fuzzy_map(_field(b), 8)
    assert np.allclose(fuzzy_map(_field(2 * a - b), 8), 2 * ma - mb)
    assert np.allclose(ma, ma.conj().T)


def test_constant_maps_to_identity_multiple():
    m = fuzzy_map(_field(np.ones(GRID.shape)), 5)
    assert np.allclose(m, m[0, 0] * np.eye(5))
    assert np.isclose(hs_norm(m), np.sqrt(4 * np.pi))


def test_hs_norm_tracks_l2_norm_at_large_n():
    basis = real_harmonic_basis(GRID, 2)
    for b in basis[1:]:
        errs = [abs(hs_norm(fuzzy_map(_field(b), n)) - 1.0) for n in (8, 16, 32)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.1


def test_band_limit_violation_lists_modes():
    z, ph = GRID.mesh
    f = sph_harm_y(4, 2, np.arccos(z), ph)
    with pytest.raises(BandLimitError) as exc:
        fuzzy_map(_field(f), 3)
    assert (4, 2) in exc.value.modes


def test_fuzzy_deviation_decreases_with_n():
    rng = np.random.default_rng(1)
    basis = real_harmonic_basis(GRID, 2)
    f, h = (_field(np.tensordot(rng.normal(size=len(basis)), basis, axes=1)) for _ in range(2))
    dev = [bracket_deviation(f, h, n) for n in (4, 8, 16, 32)]
    assert all(a > b for a, b in zip(dev, dev[1:]))
    # the finite-N error is first order in 1/N
    assert 1.6 < dev[-2] / dev[-1] < 2.4


def test_matrix_bracket_checks_shapes():
    with pytest.raises(ValueError):
        matrix_bracket(np.eye(2), np.eye(3))


def test_matrix_configuration():
    cfg = FieldConfiguration(GRID, sphere_harmonics_l1(GRID))
    mc = fuzzy_map_configuration(cfg, 4)
    assert mc.d == 3 and mc.traceless()
    with pytest.raises(ValueError):
        MatrixConfiguration(2, np.array([[[0, 1], [0, 0]]]))
