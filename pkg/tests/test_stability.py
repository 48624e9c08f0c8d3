import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from openrabi import meanfield as mf
from openrabi import stability as stab
from openrabi.params import ModelParams

K, GM = 3.0, 0.5


def srp_states(p):
    return mf.superradiant_states(p)[1]


def eliminated_oracle(p, s):
    """Slow-manifold reduction of the full 4x4 finite-difference Jacobian."""
    J = stab.full_jacobian(p, s, 1.0)
    jff, jfs, jsf, jss = J[:2, :2], J[:2, 2:], J[2:, :2], J[2:, 2:]
    e = -np.linalg.solve(jss, jsf)
    return e, jff + jfs @ e


params = st.builds(
    ModelParams,
    tau=st.floats(-3, 6).filter(lambda t: abs(abs(t) - 1) > 1e-2),
    g_tilde=st.floats(0.1, 2.5),
    kappa=st.floats(0, 4),
    gamma_tilde=st.floats(0.05, 1.5),
)


@settings(max_examples=150, deadline=None)
@given(params)
def test_spin_elimination_matches_full_jacobian(p):
    states = srp_states(p) + [mf.trivial_state()]
    for s in states:
        e, m = eliminated_oracle(p, s)
        scale = 1 + p.g_tilde**2 * (1 + p.kappa + p.tau**2)
        assert np.allclose(stab.spin_eliminate(p, s), e, atol=1e-6 * scale)
        assert np.allclose(stab.build_M(p, s).array(), m, atol=1e-6 * scale)


def test_np_elimination_example():
    p = ModelParams(2.0, 0.5, K, GM)
    e = stab.spin_eliminate(p, mf.trivial_state())
    g, tau = p.g_tilde, p.tau
    assert e == pytest.approx(np.array([[-2 * g * (1 + tau), 0], [0, 2 * g * (1 - tau)]]), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(params)
def test_trace_is_minus_two_gamma(p):
    for s in srp_states(p) + [mf.trivial_state()]:
        assert stab.build_M(p, s).trace == pytest.approx(-2 * p.gamma_tilde, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(params)
def test_closed_form_q_is_det_times_sigma(p):
    for s in srp_states(p) + [mf.trivial_state()]:
        m = stab.build_M(p, s)
        assert m.q_value == pytest.approx(m.det * m.sigma, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(params)
def test_np_det_reduces_to_q_np(p):
    m = stab.build_M(p, mf.trivial_state())
    assert m.sigma == 1.0
    assert m.q_value == pytest.approx(stab.q_np(p), rel=1e-12, abs=1e-12)
    assert stab.q_np(p) == pytest.approx(mf.q_np(p.tau, p.kappa, p.gamma_tilde, p.g_tilde), rel=1e-14, abs=1e-14)


def test_q_np_vanishes_on_critical_lines():
    for tau in (-2.0, 0.5, 2.0, 2.5, 4.0):
        for g in mf.critical_g_pm(tau, K, GM):
            if g is not None:
                assert abs(stab.q_np(ModelParams(tau, g, K, GM))) < 1e-10


def test_np_eigenvalue_crosses_zero_at_boundary():
    gc = mf.critical_g_pm(2.0, K, GM)[0]
    below = stab.assess(ModelParams(2.0, gc * (1 - 1e-4), K, GM), mf.trivial_state())
    above = stab.assess(ModelParams(2.0, gc * (1 + 1e-4), K, GM), mf.trivial_state())
    assert below.stable and below.max_real < 0
    assert not above.stable and above.max_real > 0
    at = stab.assess(ModelParams(2.0, gc, K, GM), mf.trivial_state())
    assert abs(at.max_real) < 1e-9 and at.label == "critical"


def test_complex_pair_has_real_part_minus_gamma():
    p = ModelParams(0.5, 0.3, K, GM)
    ev = stab.assess(p, mf.trivial_state()).eigenvalues
    assert all(abs(e.imag) > 0 for e in ev)
    assert all(e.real == pytest.approx(-GM, abs=1e-14) for e in ev)


def test_eigenvalues_are_matrix_eigenvalues():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.normal(size=4) * 10 ** rng.uniform(-3, 3)
        m = stab.StabilityMatrix(*a, 1.0, 0.0)
        ours = sorted(stab.eigenvalues(m), key=lambda z: (z.imag, z.real))
        ref = sorted(np.linalg.eigvals(m.array()), key=lambda z: (z.imag, z.real))
        assert np.allclose(ours, ref, rtol=1e-9, atol=1e-12 * np.abs(a).max())


def test_np_example_stable_and_unstable():
    assert stab.assess(ModelParams(0.5, 1.0, K, GM), mf.trivial_state()).stable
    assert not stab.assess(ModelParams(2.0, 1.2, K, GM), mf.trivial_state()).stable
    (s,) = [c for c in srp_states(ModelParams(2.0, 1.2, K, GM))][:1]
    assert stab.assess(ModelParams(2.0, 1.2, K, GM), s).stable


def _slow_pair(eigs):
    return sorted(eigs, key=lambda z: abs(z))[:2]


def test_full_jacobian_slow_eigenvalues_match_reduced():
    """Large Delta/omega: the two slow eigenvalues of the 4x4 flow approach those of M."""
    rng = np.random.default_rng(7)
    ratio = 1e4
    checked = 0
    while checked < 50:
        p = ModelParams(rng.uniform(-3, 4), rng.uniform(0.1, 1.8), rng.uniform(0, 4), rng.uniform(0.1, 1.0))
        if abs(abs(p.tau) - 1) < 0.05:
            continue
        cands = srp_states(p)
        s = cands[0] if cands else mf.trivial_state()
        full = _slow_pair(np.linalg.eigvals(stab.full_jacobian(p, s, ratio, h=1e-6)))
        red = np.linalg.eigvals(stab.build_M(p, s).array())
        full = sorted(full, key=lambda z: (z.imag, z.real))
        red = sorted(red, key=lambda z: (z.imag, z.real))
        scale = max(np.abs(red).max(), p.gamma_tilde)
        assert np.max(np.abs(np.array(full) - np.array(red))) < 0.01 * scale
        checked += 1


@settings(max_examples=100, deadline=None)
@given(params)
def test_assess_labels_consistent(p):
    for s in srp_states(p) + [mf.trivial_state()]:
        v = stab.assess(p, s)
        assume(abs(v.max_real) > 1e-9)
        assert v.stable == (v.max_real < 0)
        assert v.label == ("stable" if v.stable else "unstable")
