import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openrabi import dynamics as dy
from openrabi import meanfield as mf
from openrabi.params import ModelParams

K, GM = 3.0, 0.5


def test_origin_is_fixed_point():
    p = ModelParams(2.0, 1.2, K, GM)
    assert dy.rhs(p, 0j, -1) == 0 and dy.rhs(p, 0j, 1) == 0


def test_meanfield_states_are_fixed_points():
    for tau, g, kappa in ((2.0, 1.2, K), (6.0, 0.5, K), (0.5, 1.5, 0.0), (-2.0, 0.9, 0.0)):
        p = ModelParams(tau, g, kappa, GM)
        for s in mf.superradiant_states(p)[1]:
            assert abs(dy.rhs(p, s.alpha, -1)) < 1e-12
            sx, sy, sz = dy.spin_from_alpha(p, s.alpha, -1)
            assert (sx, sy, sz) == pytest.approx((s.s_x, s.s_y, s.s_z), abs=1e-12)


def test_isotropic_fixed_point():
    p = ModelParams(1.0, 1.0, 0.0, GM)
    sz, al = mf.isotropic_state(p)
    assert abs(dy.rhs(p, al, -1)) < 1e-12
    assert dy.spin_from_alpha(p, al, -1)[2] == pytest.approx(sz, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-4, 6), st.floats(0.01, 3), st.complex_numbers(max_magnitude=10), st.sampled_from([-1, 1]))
def test_spin_norm_and_branch_sign(tau, g, alpha, branch):
    p = ModelParams(tau, g, K, GM)
    sx, sy, sz = dy.spin_from_alpha(p, alpha, branch)
    assert abs(sx**2 + sy**2 + sz**2 - 1) < 1e-12
    assert np.sign(sz) == branch


def test_np_example_converges_to_vacuum():
    tr = dy.integrate(ModelParams(0.5, 1.0, K, GM), 0.2 + 0.2j)
    assert tr.converged and tr.converged_to.is_trivial
    assert tr.converged_to.s_z == -1.0
    assert dy.classify_endpoint(tr) == "NP"
    assert tr.spin_norm_error() < 1e-12
    assert np.all(tr.s_z < 0)


def test_srp_example_converges_to_fixed_point():
    p = ModelParams(2.0, 1.2, K, GM)
    tr = dy.integrate(p, 0.1 - 0.3j)
    assert dy.classify_endpoint(tr) == "SRP"
    cands = mf.superradiant_states(p)[1]
    dist = min(abs(tr.converged_to.alpha - c.alpha) for c in cands)
    assert dist < 1e-7
    assert tr.converged_to.alpha == pytest.approx(0.022337 - 0.403441j, abs=1e-6)


def test_spin_up_branch():
    tr = dy.integrate(ModelParams(2.0, 1.2, K, GM), 0.3 + 0.1j, branch=1)
    assert tr.converged and tr.converged_to.s_z == 1.0
    assert np.all(tr.s_z > 0)


def test_bistable_point_depends_on_initial_condition():
    p = ModelParams(6.0, 0.5, K, GM)
    a = dy.integrate(p, 0.3 + 0.05j)
    b = dy.integrate(p, 0.7 + 0.1j)
    assert dy.classify_endpoint(a) == "NP"
    assert dy.classify_endpoint(b) == "SRP"
    assert b.converged_to.s_z == pytest.approx(-0.18270, abs=1e-5)


def test_tolerance_robustness():
    p = ModelParams(2.0, 1.2, K, GM)
    a = dy.integrate(p, 0.1 - 0.3j, tol=1e-10)
    b = dy.integrate(p, 0.1 - 0.3j, tol=5e-11)
    assert abs(a.converged_to.alpha - b.converged_to.alpha) < 1e-8


def test_energy_like_decay_in_np():
    """Far inside the NP, |alpha| shrinks at the cavity loss rate envelope."""
    p = ModelParams(0.5, 0.3, K, GM)
    tr = dy.integrate(p, 0.5 + 0j, t_max=60)
    t, r = tr.times, np.abs(tr.alpha)
    late = t > 5
    slope = np.polyfit(t[late], np.log(r[late]), 1)[0]
    assert slope == pytest.approx(-GM, abs=0.02)


def test_unconverged_run_reports_none():
    tr = dy.integrate(ModelParams(2.0, 1.2, K, GM), 0.1 - 0.3j, t_max=1.0)
    assert not tr.converged and dy.classify_endpoint(tr) == "NoConvergence"


def test_bad_arguments():
    p = ModelParams(2.0, 1.2, K, GM)
    with pytest.raises(ValueError):
        dy.integrate(p, 0.1j, branch=0)
    with pytest.raises(ValueError):
        dy.integrate(p, 0.1j, t_max=0)


def test_basin_map_contains_both_outcomes_and_is_worker_independent():
    p = ModelParams(6.0, 0.5, K, GM)
    kw = dict(re_range=(0.0, 1.0), im_range=(-0.5, 0.5), resolution=(4, 3), t_max=600)
    re1, im1, lab1 = dy.basin_map(p, workers=1, **kw)
    re2, im2, lab2 = dy.basin_map(p, workers=2, **kw)
    assert lab1.shape == (4, 3)
    assert np.array_equal(lab1, lab2)
    assert {"NP", "SRP"} <= set(lab1.ravel())


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("OPENRABI_WORKERS", "3")
    assert dy.worker_count() == 3
    assert dy.worker_count(2) == 2
    monkeypatch.delenv("OPENRABI_WORKERS")
    assert dy.worker_count() >= 1
