import numpy as np
import pytest

from octomembrane.algebra import TRIPLES
from octomembrane.flow import selfdual_rhs
from octomembrane.nahm import (OdeState, ansatz_residual, diagonal_top_rhs, equal_component_solution,
                               f_equation_residual, factorized_configuration, ode_evolve,
                               off_diagonal_norm, z_rhs)
from octomembrane.surface import FieldConfiguration, SurfaceGrid, sphere_harmonics_l1

RNG = np.random.default_rng(0)


def test_top_rhs_explicit_form():
    r = RNG.normal(size=7)
    expected = np.zeros(7)
    for t in TRIPLES:
        for a in range(3):
            i, j, k = t[a] - 1, t[(a + 1) % 3] - 1, t[(a + 2) % 3] - 1
            expected[i] += r[j] * r[k] / 3
    assert np.allclose(diagonal_top_rhs(r), expected, atol=1e-15)
    # index 1 sits in (1,2,3), (6,5,1), (7,1,4)
    assert np.isclose(diagonal_top_rhs(r)[0], (r[1] * r[2] + r[4] * r[5] + r[3] * r[6]) / 3)


def test_top_rhs_on_ones_and_zero():
    assert np.array_equal(diagonal_top_rhs(np.ones(7)), np.ones(7))
    assert np.array_equal(diagonal_top_rhs(np.zeros(7)), np.zeros(7))


def test_z_rhs_special_cases():
    assert np.array_equal(z_rhs(np.zeros((7, 7))), np.zeros((7, 7)))
    c = 0.7
    assert np.abs(z_rhs(c * np.eye(7)) - c * c * np.eye(7)).max() < 1e-13
    r = RNG.normal(size=7)
    assert np.allclose(z_rhs(np.diag(r)), np.diag(diagonal_top_rhs(r)), atol=1e-14)
    with pytest.raises(ValueError):
        z_rhs(np.eye(3))


def test_ansatz_residual():
    c = 1.3
    assert ansatz_residual(c * np.eye(7), c * c * np.eye(7)) == 0
    assert ansatz_residual(np.zeros((7, 7)), np.zeros((7, 7))) == 0
    z = RNG.normal(size=(7, 7))
    assert np.isfinite(ansatz_residual(z, z_rhs(z)))


def test_equal_component_top_matches_closed_form():
    c = 0.5
    final = ode_evolve(OdeState(np.full(7, c), dt=1e-3), 1500)
    assert np.abs(final.y / equal_component_solution(c, final.t) - 1).max() < 1e-8


def test_matrix_mode_preserves_diagonal():
    final = ode_evolve(OdeState(np.diag(RNG.normal(size=7) * 0.3), dt=1e-3), 500)
    assert off_diagonal_norm(final.y) == 0
    assert final.mode == "matrix"


def test_matrix_and_diagonal_modes_agree():
    r = RNG.normal(size=7) * 0.3
    a = ode_evolve(OdeState(r, dt=1e-2), 50).y
    b = ode_evolve(OdeState(np.diag(r), dt=1e-2), 50).y
    assert np.allclose(np.diag(b), a, atol=1e-14)


def test_blowup_guard():
    final = ode_evolve(OdeState(np.full(7, 1.0), dt=1e-2), 500, guard=1e3)
    # exact solution 1/(1-t) blows up at t=1; RK4 lags slightly
    assert final.halted and 0.95 < final.t < 1.05


def test_closed_form_rejects_blowup():
    assert equal_component_solution(1.0, 0.5) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        equal_component_solution(1.0, 1.0)


def test_f_equation():
    g = SurfaceGrid.sphere(16)
    f = FieldConfiguration(g, sphere_harmonics_l1(g))
    assert f_equation_residual(f) < 1e-10
    assert f_equation_residual(f.embed(7)) < 1e-10
    assert f_equation_residual(FieldConfiguration.zeros(g, 7)) == 0
    lam = 2.0
    scaled = f_equation_residual(f.scaled(lam))
    assert np.isclose(scaled, abs(lam - lam ** 2) * f.max_abs(), rtol=1e-10)


def test_factorized_configuration_stays_selfdual_for_scalar_z():
    g = SurfaceGrid.sphere(16)
    f = FieldConfiguration(g, sphere_harmonics_l1(g))
    c = 0.4
    x = factorized_configuration(c * np.eye(7), f)
    zdot = z_rhs(c * np.eye(7))
    xdot = factorized_configuration(zdot, f).values
    assert np.abs(xdot - selfdual_rhs(x).values).max() < 1e-12
