import numpy as np
import pytest

from octomembrane.algebra import random_g2_element
from octomembrane.flow import FlowState, evolve, selfdual_rhs
from octomembrane.solutions import (StringSolutionSpec, TodaSolutionSpec, collapsing_sphere_eval,
                                    string_solution_eval, string_solution_velocity, toda_eval)
from octomembrane.surface import FieldConfiguration, SurfaceGrid, random_band_limited
from octomembrane.susy import (build_susy_operator, count_preserved_susy, paper_spinor,
                               paper_spinor_residual, sector_basis)

S16 = SurfaceGrid.sphere(16)


def random7(seed, grid=S16, amplitude=0.3):
    return FieldConfiguration(grid, random_band_limited(grid, 7, np.random.default_rng(seed), 2, amplitude))


def count(cfg, xdot=None, **kw):
    return count_preserved_susy(build_susy_operator(cfg, xdot, **kw))


def test_sector_basis_is_isometry():
    for s in (1, -1):
        b = sector_basis(s)
        assert np.allclose(b.conj().T @ b, np.eye(8))
    assert np.allclose(sector_basis(1).conj().T @ sector_basis(-1), 0)
    assert np.isclose(np.linalg.norm(paper_spinor()), 1)
    with pytest.raises(ValueError):
        sector_basis(0)


def test_zero_configuration_keeps_everything():
    rep = count(FieldConfiguration.zeros(S16, 7))
    assert rep.kernel_dim == 16
    assert rep.sector_kernel_dims == (8, 8)


def test_three_dim_selfdual_states_keep_eight():
    for cfg in (collapsing_sphere_eval(1.0, 0.3, S16),
                toda_eval(TodaSolutionSpec(kappa=1.0, t0=1.0), S16, 0.2),
                FieldConfiguration(S16, random_band_limited(S16, 3, np.random.default_rng(0), 2, 0.3))):
        assert count(cfg).kernel_dim == 8


@pytest.mark.parametrize("seed", range(3))
def test_generic_seven_dim_selfdual_keeps_one(seed):
    op = build_susy_operator(random7(seed))
    rep = count_preserved_susy(op, expected=1)
    assert rep.matches
    assert rep.sector_kernel_dims == (1, 0)
    assert paper_spinor_residual(op) < 1e-10


def test_evolved_and_rotated_snapshots_keep_one():
    cfg = random7(5)
    evolved = evolve(FlowState(cfg, dt=1e-2), 10).cfg
    assert count(evolved).kernel_dim == 1
    r = random_g2_element(np.random.default_rng(6))
    rotated = cfg.rotated(r)
    assert count(rotated).kernel_dim == 1
    a = np.array(count(cfg).singular_values)
    b = np.array(count(rotated).singular_values)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12)


def test_random_velocity_keeps_none():
    cfg = random7(7)
    noise = random_band_limited(S16, 7, np.random.default_rng(8), 2, 0.3)
    assert count(cfg, noise).kernel_dim == 0


def test_smallest_singular_value_grows_with_perturbation():
    cfg = random7(9)
    noise = random_band_limited(S16, 7, np.random.default_rng(10), 2, 1.0)
    xdot = selfdual_rhs(cfg).values
    smallest = [count(cfg, xdot + eps * noise).singular_values[-1] for eps in (0.0, 1e-6, 1e-4, 1e-2)]
    assert smallest[0] < 1e-10
    assert all(a < b for a, b in zip(smallest, smallest[1:]))


def test_string_solutions():
    t32 = SurfaceGrid.torus(16)
    straight = StringSolutionSpec(a=(0,) * 7, b=(0, 0, 1, 0, 0, 0, 0), profiles=({1: 0.3}, {}, {}))
    cfg = string_solution_eval(straight, t32, 0.1)
    assert count(cfg, string_solution_velocity(straight, t32, 0.1)).kernel_dim == 8
    drifting = StringSolutionSpec(a=(1, 0, 0, 0, 0, 0, 0), b=(0, 0, 1, 0, 0, 0, 0),
                                  profiles=({1: 0.3}, {1: 0.2}, {2: 0.1}))
    cfg = string_solution_eval(drifting, t32, 0.1)
    assert count(cfg, string_solution_velocity(drifting, t32, 0.1)).kernel_dim == 2


def test_conventions():
    cfg = random7(11)
    assert count(cfg, convention="-i").kernel_dim == count(cfg, convention="i").kernel_dim
    with pytest.raises(ValueError):
        build_susy_operator(cfg, convention="2i")


def test_report_dict():
    rep = count_preserved_susy(build_susy_operator(random7(12)), expected=2)
    d = rep.to_dict()
    assert d["matches"] is False and d["expected"] == 2
    assert len(d["singular_values"]) == 16


def test_operator_rejects_bad_shapes():
    with pytest.raises(ValueError):
        build_susy_operator(FieldConfiguration.zeros(S16, 4))
    with pytest.raises(ValueError):
        build_susy_operator(random7(0), np.zeros((7, 4, 4)))
