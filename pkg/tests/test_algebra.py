import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from octomembrane.algebra import (TRIPLES, Octonion, antisymmetrizer, apply_g2, beta_commutators,
                                  beta_product, build_beta_matrices, build_structure_constants,
                                  clifford_residual, cross_constants, derivation_residual,
                                  g2_algebra_basis, g2_membership, g2_residual, octonion_multiply,
                                  phi_from_psi, random_g2_element, verify_identity_suite, x_tensor)
from octomembrane.surface import FieldConfiguration, SurfaceGrid, random_band_limited


@pytest.fixture(scope="module")
def sc():
    return build_structure_constants()


def psi1(sc, i, j, k):
    return sc.psi[i - 1, j - 1, k - 1]


def test_oriented_triples_are_plus_one(sc):
    for t in TRIPLES:
        for r in range(3):
            a, b, c = t[r:] + t[:r]
            assert psi1(sc, a, b, c) == 1
            assert psi1(sc, b, a, c) == -1


def test_table_examples(sc):
    assert psi1(sc, 1, 2, 3) == 1
    assert psi1(sc, 4, 5, 3) == -1
    assert sc.phi[0, 1, 3, 4] == -1
    assert not sc.psi[0, 0].any()


def test_psi_counts(sc):
    psi = sc.psi
    assert int(np.sum(psi * psi)) == 42
    assert np.count_nonzero(psi) == 42
    sq = np.sum(psi * psi, axis=2)
    assert np.array_equal(sq, 1 - np.eye(7, dtype=int))
    assert set(np.unique(sc.phi)) <= {-1, 0, 1}


def test_tables_are_read_only(sc):
    with pytest.raises(ValueError):
        sc.psi[0, 1, 2] = 5


def test_phi_matches_hodge_dual(sc):
    # phi is the dual four-form: nonzero exactly on the complements of the seven triples
    for t in TRIPLES:
        rest = sorted(set(range(1, 8)) - set(t))
        assert abs(sc.phi[tuple(i - 1 for i in rest)]) == 1
    assert np.count_nonzero(sc.phi) == 7 * 24


def test_cross_constants():
    eps = cross_constants(3)
    assert eps[0, 1, 2] == 1 and eps[1, 0, 2] == -1
    assert np.array_equal(cross_constants(7)[:3, :3, :3], eps)
    with pytest.raises(ValueError):
        cross_constants(5)


# ------------------------------------------------------------------ octonions

def test_unit_products():
    assert octonion_multiply(Octonion.unit(1), Octonion.unit(2)).allclose(Octonion.unit(3))
    for i in range(1, 8):
        assert (Octonion.unit(i) * Octonion.unit(i)).allclose(Octonion.unit(0) * -1.0)


octonions = st.lists(st.floats(-3, 3, allow_nan=False), min_size=8, max_size=8).map(Octonion.from_array)


@settings(max_examples=60, deadline=None)
@given(octonions, octonions)
def test_norm_is_multiplicative(a, b):
    assert np.isclose((a * b).norm2(), a.norm2() * b.norm2(), rtol=1e-10, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(octonions)
def test_identity_and_conjugation(a):
    assert (Octonion.unit(0) * a).allclose(a)
    assert (a * Octonion.unit(0)).allclose(a)
    c = a.conjugate()
    assert c.x0 == a.x0 and np.array_equal(c.xi, -a.xi)
    assert (a * c).allclose(Octonion(a.norm2(), np.zeros(7)), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(octonions, octonions)
def test_alternativity(a, b):
    # octonions are not associative but are alternative: (a a) b = a (a b)
    assert ((a * a) * b).allclose(a * (a * b), atol=1e-8)


def test_not_associative():
    o = Octonion.unit
    assert not ((o(1) * o(2)) * o(4)).allclose(o(1) * (o(2) * o(4)))


# ------------------------------------------------------------ identity suite

def test_identity_suite_passes():
    rep = verify_identity_suite()
    assert rep.passed
    assert len(rep.checks) == 4
    assert all(c.violations == 0 for c in rep.checks)
    assert rep.psi_square_sum == 42


def test_identity_suite_detects_sign_flip(sc):
    psi = sc.psi.copy()
    for a, b, c in itertools.permutations((0, 1, 2)):
        psi[a, b, c] = 0
    psi[0, 1, 2] = -1
    psi[1, 2, 0] = psi[2, 0, 1] = 1
    psi[1, 0, 2] = psi[0, 2, 1] = psi[2, 1, 0] = -1
    rep = verify_identity_suite(psi=psi, phi=sc.phi)
    d = rep.to_dict()
    first = d["checks"][0]
    assert first["passed"] is False
    assert len(set(first["first_violation"]) & {1, 2, 3}) >= 2


def test_identity_suite_detects_broken_antisymmetry(sc):
    psi = sc.psi.copy()
    psi[0, 1, 2] = 0
    rep = verify_identity_suite(psi=psi, phi=phi_from_psi(psi))
    names = {c.name: c.passed for c in rep.checks}
    assert not all(names.values())


def test_x_tensor_limits(sc):
    assert np.array_equal(x_tensor(0.0), antisymmetrizer(7))
    x = x_tensor(1.7)
    assert np.allclose(x, -np.swapaxes(x, 0, 1))
    assert np.allclose(x, -np.swapaxes(x, 2, 3))


def test_x_minus_one_annihilates_psi(sc):
    r = np.einsum("ijk,jklm->ilm", sc.psi, x_tensor(-1.0))
    assert np.abs(r).max() == 0


def test_x_product_vanishes(sc):
    r = np.einsum("ijmn,mnkl->ijkl", x_tensor(-1.0), x_tensor(2.0))
    assert np.abs(r).max() == 0


# ------------------------------------------------------------------- betas

def test_beta_clifford_and_product():
    bm = build_beta_matrices()
    assert clifford_residual(bm.beta) == 0
    assert np.array_equal(beta_product(bm.beta), -np.eye(8, dtype=int))
    assert bm.beta.dtype.kind == "i"


def test_beta_elements(sc):
    beta = build_beta_matrices().beta
    for n in range(7):
        assert np.array_equal(beta[n, :7, :7], sc.psi[:, n, :])
        assert beta[n, n, 7] == 1 and beta[n, 7, n] == -1


def test_beta_commutators(sc):
    beta = build_beta_matrices().beta
    c = beta_commutators(beta)
    block = -2 * (2 * antisymmetrizer(7) - sc.phi)
    assert np.array_equal(c[:, :, :7, :7], np.einsum("ijmn->mnij", block))
    assert np.array_equal(c[:, :, 7, :7], 2 * np.einsum("nmj->mnj", sc.psi))


def test_gamma16_relations():
    g = build_beta_matrices().gamma16.astype(float)
    eye = np.eye(16)
    # gamma_1..gamma_7 and gamma_9 form a Euclidean Clifford set
    euclid = [*range(7), 8]
    for a in euclid:
        for b in euclid:
            assert np.array_equal(g[a] @ g[b] + g[b] @ g[a], 2 * eye * (a == b))
    # the block-off-diagonal gamma_8 squares to -1 and commutes with gamma_1..7
    assert np.array_equal(g[7] @ g[7], -eye)
    for n in range(7):
        assert np.array_equal(g[7] @ g[n], g[n] @ g[7])
    assert np.array_equal(g[9], eye)


# ---------------------------------------------------------------------- G2

def test_g2_dimension():
    basis = g2_algebra_basis()
    assert len(basis) == 14
    for a in basis:
        assert np.allclose(a, -a.T)
        assert derivation_residual(a) < 1e-12
    flat = np.array([a.ravel() for a in basis])
    assert np.linalg.matrix_rank(flat) == 14


def test_g2_membership():
    rng = np.random.default_rng(0)
    r = random_g2_element(rng)
    assert g2_residual(r) < 1e-12
    assert g2_membership(r)
    c, s = np.cos(0.3), np.sin(0.3)
    rot = np.eye(7)
    rot[:2, :2] = [[c, -s], [s, c]]
    assert not g2_membership(rot)
    assert g2_membership(np.eye(7))
    assert not g2_membership(2 * np.eye(7))


def test_apply_g2_rotates_components():
    rng = np.random.default_rng(1)
    r = random_g2_element(rng)
    g = SurfaceGrid.sphere(8)
    cfg = FieldConfiguration(g, random_band_limited(g, 7, rng, 2))
    out = apply_g2(r, cfg)
    assert np.allclose(out.values, np.einsum("ij,j...->i...", r, cfg.values))
    with pytest.raises(ValueError):
        apply_g2(r, FieldConfiguration(g, cfg.values[:3]))
