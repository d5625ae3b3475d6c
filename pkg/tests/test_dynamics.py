import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speclab import dynamics as dy
from speclab.potentials import Potential

import oracles

ks = st.floats(0.02, 0.98)


def test_energy_point_validation():
    ep = dy.EnergyPoint.from_k(0.25)
    assert ep.E == pytest.approx(math.sqrt(2))
    assert dy.EnergyPoint.from_E(ep.E).k == pytest.approx(0.25, abs=1e-15)
    for bad in (lambda: dy.EnergyPoint(0.0, 0.3), lambda: dy.EnergyPoint.from_k(1.0),
                lambda: dy.EnergyPoint.from_E(2.0)):
        with pytest.raises(ValueError):
            bad()


def test_free_product_at_zero_energy_is_identity_after_four():
    T = dy.transfer_product(Potential.zero(), dy.EnergyPoint.from_k(0.5), 4)
    np.testing.assert_allclose(T.as_array(), np.eye(2), atol=1e-15)


@given(k=ks, L=st.integers(1, 400), B=st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_transfer_product_matches_plain_loop(k, L, B):
    p = Potential.power_decay(abs(B) + 1e-3)
    ep = dy.EnergyPoint.from_k(k)
    T = dy.transfer_product(p, ep, L).as_array()
    ref = np.array(oracles.transfer_product(oracles.potential_list("power_decay", L, B=abs(B) + 1e-3), ep.E, L))
    np.testing.assert_allclose(T, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


@given(k=ks, L=st.integers(1, 20_000))
@settings(max_examples=30, deadline=None)
def test_unimodular(k, L):
    T = dy.transfer_product(Potential.seeded_random(2.0, 5), dy.EnergyPoint.from_k(k), L)
    assert T.det_residual() < dy.DET_RTOL


def test_rescaled_product_stays_finite():
    # outside the band the product grows exponentially; the log scale absorbs it
    p = Potential.sampled([0.0] + [-3.0] * 2000)
    T = dy.transfer_product(p, dy.EnergyPoint.from_k(0.3), 2000)
    assert T.log_scale > 100
    assert T.det_residual() < dy.DET_RTOL


@given(k=ks, R=st.floats(1e-3, 1e3), th=st.floats(0, 2, exclude_max=True))
@settings(max_examples=100, deadline=None)
def test_prufer_round_trip(k, R, th):
    ep = dy.EnergyPoint.from_k(k)
    u = dy.prufer_vector(R, th, ep)
    R2, th2 = dy.prufer_from_vector(*u, ep)
    assert R2 == pytest.approx(R, rel=1e-12)
    assert abs((th2 - th + 1) % 2 - 1) < 1e-12


@given(k=ks, a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3))
@settings(max_examples=100, deadline=None)
def test_vector_round_trip(k, a, b):
    if math.hypot(a, b) < 1e-6:
        return
    ep = dy.EnergyPoint.from_k(k)
    R, th = dy.prufer_from_vector(a, b, ep)
    np.testing.assert_allclose(dy.prufer_vector(R, th, ep), (a, b), atol=1e-12 * max(1, R))
    R2, th2 = dy.prufer_from_vector(2 * a, 2 * b, ep)
    assert R2 == pytest.approx(2 * R) and th2 == pytest.approx(th, abs=1e-14)


def test_prufer_vector_example():
    ep = dy.EnergyPoint.from_k(0.25)
    R, th = dy.prufer_from_vector(ep.sin, 0.0, ep)
    u = dy.prufer_vector(R, th, ep)
    np.testing.assert_allclose(u, (ep.sin, 0.0), atol=1e-12)
    R, th = dy.prufer_from_vector(0.0, 1.0, ep)
    assert R == pytest.approx(1 / ep.sin) and th == pytest.approx(ep.k)
    with pytest.raises(ValueError):
        dy.prufer_from_vector(0.0, 0.0, ep)


def test_initial_state_and_free_trace():
    ep = dy.EnergyPoint.from_k(0.3)
    s = dy.initial_state(ep)
    assert (s.n, s.theta) == (1, 0.3)
    assert s.R == pytest.approx(1 / ep.sin)
    tr = dy.prufer_trace(Potential.zero(), ep, 500)
    np.testing.assert_allclose(tr.theta, 0.3 * np.arange(502), atol=1e-12)
    np.testing.assert_allclose(tr.logR, -math.log(ep.sin), atol=1e-14)
    assert tr[1].theta == pytest.approx(0.3)


@given(k=ks, v=st.floats(-4, 4), th=st.floats(0, 1, exclude_max=True))
@settings(max_examples=200, deadline=None)
def test_step_matches_recursion(k, v, th):
    # one Pruefer step equals one application of the step matrix
    ep = dy.EnergyPoint.from_k(k)
    s = dy.PrueferState(3, 0.1, th)
    a, b = dy.prufer_vector(s.R, s.theta, ep)
    nxt = dy.prufer_step(s, v, ep)
    R, t = dy.prufer_from_vector(b, (ep.E - v) * b - a, ep)
    assert nxt.R == pytest.approx(R, rel=1e-9)
    assert abs((nxt.theta - t + 0.5) % 1 - 0.5) < 1e-9


@given(k=ks, v=st.floats(-1.5, 1.5), th=st.floats(0.01, 0.99))
@settings(max_examples=200, deadline=None)
def test_step_satisfies_cot_recursion(k, v, th):
    ep = dy.EnergyPoint.from_k(k)
    nxt = dy.prufer_step(dy.PrueferState(1, 0.0, th), v, ep)
    lhs = 1 / math.tan(math.pi * (nxt.theta - ep.k))
    rhs = 1 / math.tan(math.pi * th) - v / ep.sin
    assert lhs == pytest.approx(rhs, rel=1e-7, abs=1e-7)


@pytest.mark.parametrize("p", [Potential.power_decay(1.0), Potential.wigner_von_neumann(3, 0.2, 1.0),
                               Potential.seeded_random(2.0, 4)], ids=lambda p: p.family)
@pytest.mark.parametrize("k", [0.07, 0.3, 0.55, 0.9])
def test_trace_matches_matrix_route(p, k):
    ep = dy.EnergyPoint.from_k(k)
    tr = dy.prufer_trace(p, ep, 3000)
    lr, th = dy.matrix_route_states(p, ep, 3000)
    np.testing.assert_allclose(tr.logR, lr, atol=dy.EQUIV_TOL)
    d = np.abs((tr.theta - th + 0.5) % 1.0 - 0.5)
    assert d.max() < dy.EQUIV_TOL


def test_trace_matches_plain_solution():
    V = oracles.potential_list("power_decay", 300, B=1.0)
    k = 0.37
    u = oracles.dirichlet_solution(V, 2 * math.cos(math.pi * k), 301)
    tr = dy.prufer_trace(Potential.power_decay(1.0), dy.EnergyPoint.from_k(k), 300)
    for n in (1, 2, 50, 300, 301):
        R, th = oracles.prufer_pair(u[n - 1], u[n], k)
        assert tr.logR[n] == pytest.approx(math.log(R), abs=1e-12)
        assert abs((tr.theta[n] - th + 0.5) % 1 - 0.5) < 1e-12


def test_final_amplitude_reproduces_transfer_columns():
    p = Potential.power_decay(1.0)
    ep = dy.EnergyPoint.from_k(0.21)
    L = 777
    T = dy.transfer_product(p, ep, L)
    tr = dy.prufer_trace(p, ep, L)
    b, d = T.b * math.exp(T.log_scale), T.d * math.exp(T.log_scale)
    R, th = dy.prufer_from_vector(b, d, ep)
    assert math.exp(tr.logR[L + 1]) == pytest.approx(R, rel=1e-9)


def test_angle_increment_audit():
    tr = dy.prufer_trace(Potential.power_decay(0.4), dy.EnergyPoint.from_k(0.25), 10 ** 6)
    audited, bad = tr.increment_audit()
    # V(0) / sin(pi/4) > 1/2, every later step is audited
    assert audited == 10 ** 6
    assert bad.size == 0


@given(k=ks, v=st.floats(-0.5, 0.5), th=st.floats(0, 1, exclude_max=True))
@settings(max_examples=300, deadline=None)
def test_angle_increment_bound_pointwise(k, v, th):
    ep = dy.EnergyPoint.from_k(k)
    t = v / ep.sin
    if abs(t) >= 0.5:
        return
    nxt = dy.prufer_step(dy.PrueferState(0, 0.0, th), v, ep)
    assert abs(nxt.theta - ep.k - th) <= abs(t) + 1e-12


def test_audit_flags_large_steps_only_when_small_t():
    tr = dy.prufer_trace(Potential.sampled([0.0, 5.0, 0.0]), dy.EnergyPoint.from_k(0.3), 5)
    audited, bad = tr.increment_audit()
    assert audited == 5 and bad.size == 0


@pytest.mark.parametrize("k", [0.15, 0.3, 0.45, 0.7])
def test_log_amplitude_residual_within_bound(k):
    p = Potential.power_decay(1.0)
    ep = dy.EnergyPoint.from_k(k)
    lhs, rhs, r = dy.log_amplitude_identity(p, ep, 1000)
    assert lhs - rhs == r
    assert abs(r) <= dy.residual_bound(p, ep, 1000)
    # the looser doubled bound quoted for this identity
    assert abs(r) <= 2 * dy.residual_bound(p, ep, 1000)


def test_residual_tail():
    p = Potential.power_decay(1.0)
    ep = dy.EnergyPoint.from_k(0.3)
    r3 = dy.log_amplitude_identity(p, ep, 10 ** 3)[2]
    r6 = dy.log_amplitude_identity(p, ep, 10 ** 6)[2]
    tail = dy.residual_bound(p, ep, 10 ** 6) - dy.residual_bound(p, ep, 10 ** 3)
    assert abs(r6 - r3) <= tail


@given(t=st.floats(-50, 50), a=st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_per_step_residual_bounded_by_t_squared(t, a):
    sa, s2 = math.sin(math.pi * a), math.sin(2 * math.pi * a)
    inner = 1 - t * s2 + t * t * sa * sa
    if inner <= 1e-300:
        return
    assert abs(math.log(inner) + t * s2) <= t * t + 1e-12


def test_trace_rejects_bad_horizon():
    with pytest.raises(ValueError):
        dy.prufer_trace(Potential.zero(), dy.EnergyPoint.from_k(0.3), 0)
