import numpy as np
import pytest

from octomembrane.algebra import random_g2_element
from octomembrane.flow import (DegenerateSeedError, FlowState, conserved_charge, diagnose,
                               energy_densities, eom_residual, evolve, gauss_residual, lax_residual,
                               make_null_pair, scalar_constraints_only_pair, second_derivative,
                               selfdual_rhs, selfduality_residual, seven_dim_conservation_residual,
                               trajectory)
from octomembrane.solutions import collapse_radius, collapsing_sphere_eval, sphere_radius
from octomembrane.surface import FieldConfiguration, SurfaceGrid, random_band_limited, sphere_harmonics_l1

S16 = SurfaceGrid.sphere(16)
S32 = SurfaceGrid.sphere(32)


def random_cfg(grid, d, seed, amplitude=0.2, lmax=2):
    rng = np.random.default_rng(seed)
    return FieldConfiguration(grid, random_band_limited(grid, d, rng, lmax, amplitude))


# ---------------------------------------------------------------- rhs

def test_unit_sphere_rhs_is_identity():
    cfg = FieldConfiguration(S16, sphere_harmonics_l1(S16))
    assert np.abs(selfdual_rhs(cfg).values - cfg.values).max() < 1e-12


def test_seven_dim_rhs_restricted_to_first_three():
    cfg3 = random_cfg(S16, 3, 0)
    r7 = selfdual_rhs(cfg3.embed(7)).values
    assert np.allclose(r7[:3], selfdual_rhs(cfg3).values, atol=1e-15)
    assert np.abs(r7[3:]).max() < 1e-15


def test_zero_rhs_and_bad_dimension():
    assert np.abs(selfdual_rhs(FieldConfiguration.zeros(S16, 7)).values).max() == 0
    with pytest.raises(ValueError):
        selfdual_rhs(FieldConfiguration.zeros(S16, 4))
    with pytest.raises(ValueError):
        FlowState(FieldConfiguration.zeros(S16, 5))


# ------------------------------------------------------------- evolve

def test_collapse_tracks_closed_form():
    state = FlowState(collapsing_sphere_eval(1.0, 0.0, S32), dt=1e-3)
    final = evolve(state, 400)
    assert not final.halted
    assert np.isclose(final.t, 0.4)
    r = sphere_radius(final.cfg)
    assert abs(r / collapse_radius(1.0, final.t) - 1) < 1e-6


def test_zero_stays_zero():
    final = evolve(FlowState(FieldConfiguration.zeros(S16, 3), dt=0.1), 20)
    assert np.abs(final.cfg.values).max() == 0


def test_blowup_guard_returns_last_finite_state():
    state = FlowState(collapsing_sphere_eval(1.0, 0.0, S16), dt=0.01)
    final = evolve(state, 500, guard=50.0, filter_cut=4)
    assert final.halted
    assert final.cfg.max_abs() <= 50.0
    assert final.t < 1.0
    assert evolve(final, 10).step == final.step


def test_rk4_order():
    grid = SurfaceGrid.sphere(8)
    errs = []
    for dt in (0.05, 0.025):
        s = evolve(FlowState(collapsing_sphere_eval(1.0, 0.0, grid), dt=dt), int(round(0.8 / dt)))
        errs.append(abs(sphere_radius(s.cfg) / collapse_radius(1.0, s.t) - 1))
    assert abs(errs[0] / errs[1] - 16) < 3


def test_lowpass_filter_extends_collapse():
    s = evolve(FlowState(collapsing_sphere_eval(1.0, 0.0, S32), dt=1e-3), 800, filter_cut=6)
    assert not s.halted
    assert abs(sphere_radius(s.cfg) / collapse_radius(1.0, s.t) - 1) < 1e-8


def test_trajectory_sampling():
    traj = trajectory(FlowState(random_cfg(S16, 3, 1), dt=1e-2), 10, every=5)
    assert [s.step for s in traj] == [0, 5, 10]


def test_invalid_dt():
    with pytest.raises(ValueError):
        evolve(FlowState(random_cfg(S16, 3, 1), dt=0.0), 1)


# ---------------------------------------------------------- residuals

@pytest.mark.parametrize("d", [3, 7])
@pytest.mark.parametrize("topology", ["sphere", "torus"])
def test_gauss_and_eom_on_random_data(d, topology):
    grid = SurfaceGrid(topology, 32, 32)
    cfg = random_cfg(grid, d, 10 + d)
    assert gauss_residual(cfg) < 1e-10
    assert eom_residual(cfg) < 1e-9


def test_gauss_negative_controls():
    cfg = random_cfg(S32, 3, 2)
    other = random_cfg(S32, 3, 3).values
    assert gauss_residual(cfg, other) > 1e-3
    assert eom_residual(cfg, other) > 1e-3
    single = FieldConfiguration(S16, random_cfg(S16, 1, 4).values)
    assert gauss_residual(single.embed(3), np.concatenate([single.values, np.zeros((2,) + S16.shape)])) == 0


def test_eom_exact_for_round_sphere():
    cfg = collapsing_sphere_eval(1.0, 0.0, S16)
    assert eom_residual(cfg) < 1e-12


def test_second_derivative_matches_time_difference():
    cfg = random_cfg(S32, 7, 5)
    h = 1e-4
    plus = evolve(FlowState(cfg, dt=h), 1).cfg
    fd = (selfdual_rhs(plus).values - selfdual_rhs(cfg).values) / h
    assert np.abs(second_derivative(cfg) - fd).max() < 1e-4


def test_selfduality_residual():
    cfg = collapsing_sphere_eval(1.0, 0.2, S16)
    assert selfduality_residual(cfg, collapse_radius(1.0, 0.2) ** 2 * sphere_harmonics_l1(S16)) < 1e-12
    assert selfduality_residual(cfg, cfg.values) > 0.1


def test_energy_densities_match():
    for d in (3, 7):
        kin, pot = energy_densities(random_cfg(S32, d, 6, amplitude=0.5, lmax=3))
        assert kin > 0 and np.isclose(kin, pot, rtol=1e-10)


# -------------------------------------------------------- null pairs

def test_canonical_pair():
    p = make_null_pair(3)
    assert np.allclose(p.u, [1, 1j, 0])
    assert np.allclose(p.v, [0, 0, -1j])
    assert max(p.constraint_residuals().values()) < 1e-15


@pytest.mark.parametrize("d", [3, 7])
def test_random_pairs_meet_constraints(d):
    for seed in range(5):
        r = make_null_pair(d, seed=seed).constraint_residuals()
        assert max(r.values()) < 1e-14


def test_degenerate_seed():
    with pytest.raises(DegenerateSeedError):
        make_null_pair(3, e=[1, 0, 0], n=[2, 0, 0])
    with pytest.raises(DegenerateSeedError):
        make_null_pair(7, e=np.ones(7), n=np.zeros(7))


# ----------------------------------------------------------- charges

def test_charges_vanish_on_trivial_data():
    pair = make_null_pair(3, seed=1)
    assert conserved_charge(FieldConfiguration.zeros(S16, 3), pair, 2) == 0
    cfg = FieldConfiguration(S16, sphere_harmonics_l1(S16))
    assert abs(conserved_charge(cfg, pair, 1)) < 1e-12
    with pytest.raises(ValueError):
        conserved_charge(cfg, pair, 0)


def test_three_dim_charges_conserved():
    cfg = random_cfg(S32, 3, 7)
    pair = make_null_pair(3, seed=2)
    q0 = [conserved_charge(cfg, pair, n) for n in (1, 2, 3)]
    assert max(abs(q) for q in q0[1:]) > 1e-3
    final = evolve(FlowState(cfg, dt=1e-3), 250)
    for n, c0 in zip((1, 2, 3), q0):
        c = conserved_charge(final, pair, n)
        assert abs(c - c0) / max(1.0, abs(c0)) < 1e-6


def test_lax_relation_in_three_dims():
    cfg = random_cfg(S32, 3, 8)
    assert lax_residual(cfg, make_null_pair(3, seed=3)) < 1e-12


def test_seven_dim_relation():
    cfg = random_cfg(S32, 7, 9, amplitude=0.5, lmax=3)
    pair = make_null_pair(7, seed=4)
    assert seven_dim_conservation_residual(cfg, pair) < 1e-9
    bad = scalar_constraints_only_pair(7, seed=4)
    assert max(list(bad.constraint_residuals().values())[:3]) < 1e-14
    assert seven_dim_conservation_residual(cfg, bad) > 1e-3
    with pytest.raises(ValueError):
        seven_dim_conservation_residual(random_cfg(S16, 3, 1), pair)


def test_seven_dim_relation_reduces_to_lax_on_three_components():
    cfg = random_cfg(S32, 3, 11).embed(7)
    pair = make_null_pair(7, e=np.eye(7)[0], n=np.eye(7)[2])
    assert lax_residual(cfg, pair) < 1e-12


def test_g2_covariance_of_flow():
    cfg = random_cfg(S32, 7, 12)
    r = random_g2_element(np.random.default_rng(5))
    a = evolve(FlowState(cfg.rotated(r), dt=1e-2), 20).cfg.values
    b = evolve(FlowState(cfg, dt=1e-2), 20).cfg.rotated(r).values
    assert np.abs(a - b).max() < 1e-8


def test_diagnostics_report():
    cfg = random_cfg(S16, 7, 13)
    pair = make_null_pair(7, seed=0)
    st = FlowState(cfg)
    ref = [conserved_charge(cfg, pair, n) for n in (1, 2, 3)]
    rep = diagnose(st, pair, reference_charges=ref, xdot=selfdual_rhs(cfg))
    d = rep.to_dict()
    assert rep.all_finite()
    assert d["charge_drift"] == [0.0, 0.0, 0.0]
    assert d["selfduality"] == 0.0
    assert "conservation7" in d
    assert diagnose(st).selfduality is None
