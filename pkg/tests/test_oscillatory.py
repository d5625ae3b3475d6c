import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speclab import oscillatory as osc
from speclab.dynamics import EnergyPoint
from speclab.potentials import Potential

import oracles

Z = Potential.zero()


def near_orthogonal_units(rng, N, dim=64, noise=0.02):
    """N unit vectors of the weighted space with small mutual overlaps."""
    n = np.arange(1, dim + 1)
    q, _ = np.linalg.qr(rng.normal(size=(dim, N)))
    units = []
    for j in range(N):
        v = q[:, j] + noise * rng.normal(size=dim)
        units.append(osc.WeightedSequence(v / np.sqrt(n)).normalized())
    return units


def test_free_cos4_sum_matches_direct_summation():
    d = osc.weighted_cos4_sum(Z, EnergyPoint.from_k(0.3), 10 ** 5)
    assert d.value == pytest.approx(oracles.free_cos4_sum(0.3, 10 ** 5), abs=1e-10)
    assert d.running_min <= d.value <= d.running_max
    assert d.checkpoints[-1] == 10 ** 5


@pytest.mark.parametrize("k", [0.1, 0.2, 0.3, 0.4])
def test_cos4_sum_does_not_drift(k):
    d = osc.weighted_cos4_sum(Potential.power_decay(1.0), EnergyPoint.from_k(k), 10 ** 5)
    assert abs(d.drift_slope) < 0.05
    assert d.running_max - d.running_min < 2.0


def test_harmonic_control():
    d = osc.harmonic_control(10 ** 5)
    assert d.drift_slope == pytest.approx(1.0, abs=0.01)
    assert d.value == pytest.approx(math.log(1e5) + 0.5772156649, abs=1e-5)


def test_checkpoint_grid():
    g = osc.checkpoint_grid(10 ** 4)
    assert g[0] == 100 and g[-1] == 10 ** 4
    assert np.all(np.diff(g) > 0)
    assert list(osc.checkpoint_grid(50)) == [50]
    assert osc.checkpoint_grid(1234)[-1] == 1234


def test_drift_slope_exact_on_log_data():
    h = np.array([10, 100, 1000, 10 ** 4])
    assert osc.drift_slope(h, 3 * np.log(h) + 2) == pytest.approx(3.0)
    assert osc.drift_slope([10], [1.0]) == 0.0


def test_cross_sum_split_identity():
    p = Potential.power_decay(1.0)
    d, split = osc.cross_sin_sum(p, 0.2, 0.23, 10 ** 4, return_split=True)
    assert d.value == pytest.approx(split, abs=1e-10)


def test_cross_sum_free_matches_direct():
    k1, k2, L = 0.2, 0.3, 5000
    ref = math.fsum(math.sin(2 * math.pi * n * k1) * math.sin(2 * math.pi * n * k2) / n
                    for n in range(1, L + 1))
    assert osc.cross_sin_sum(Z, k1, k2, L).value == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("args", [(0.2, 0.2), (0.2, 0.6), (0.0, 0.2)])
def test_cross_sum_rejects(args):
    with pytest.raises(ValueError):
        osc.cross_sin_sum(Z, *args, 100)


def test_cross_sum_log_growth_free():
    # sum_n sin(2 pi n k1) sin(2 pi n k2)/n ~ (1/2) ln(1/|k1 - k2|) for close k
    gaps = 10.0 ** -np.arange(1, 4)
    vals = [osc.cross_sin_sum(Z, 0.25, 0.25 + g, 10 ** 5).value for g in gaps]
    fit = osc.log_scaling_fit(gaps, vals)
    assert fit["slope"] == pytest.approx(0.5, abs=0.05)


def test_log_scaling_fit_synthetic():
    gaps = 10.0 ** -np.arange(1, 6)
    x = np.log(1 / gaps)
    fit = osc.log_scaling_fit(gaps, 0.7 * x + 0.2)
    assert fit["slope"] == pytest.approx(0.7) and fit["intercept"] == pytest.approx(0.2)
    assert fit["max_residual_ratio"] < 1e-12
    assert np.all(0.7 * x + 0.2 <= fit["C"] * (x + 1) + 1e-12)


def test_normalization_parts_and_growth():
    ep = EnergyPoint.from_k(0.3)
    A, H, C4 = osc.normalization_constant(Z, ep, 10 ** 5, parts=True)
    assert A == pytest.approx(H / 2 - C4 / 2, abs=1e-10)
    assert A == pytest.approx(oracles.free_sin2_sum(0.3, 10 ** 5), abs=1e-10)
    assert abs(A - 0.5 * math.log(1e5)) < 1.0
    growth = osc.normalization_constant(Z, ep, 10 ** 6) - osc.normalization_constant(Z, ep, 10 ** 3)
    assert growth == pytest.approx(0.5 * math.log(1e3), abs=0.1)


@given(k=st.floats(0.05, 0.45), L=st.integers(10, 3000))
@settings(max_examples=20, deadline=None)
def test_phase_unit_vector_is_unit(k, L):
    e = osc.phase_unit_vector(Potential.power_decay(1.0), EnergyPoint.from_k(k), L)
    assert e.norm() == pytest.approx(1.0, abs=1e-12)
    assert len(e) == L


vecs = st.lists(st.floats(-10, 10), min_size=1, max_size=40)


@given(u=vecs, v=vecs, a=st.floats(-3, 3))
@settings(max_examples=100, deadline=None)
def test_inner_product_axioms(u, v, a):
    n = min(len(u), len(v))
    u, v = np.array(u[:n]), np.array(v[:n])
    ip = osc.weighted_inner_product
    assert ip(u, v) == pytest.approx(ip(v, u), abs=1e-9)
    assert ip(a * u, v) == pytest.approx(a * ip(u, v), abs=1e-8)
    assert ip(u, u) >= 0


def test_inner_product_rejects_mismatch():
    with pytest.raises(ValueError):
        osc.weighted_inner_product(np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        osc.WeightedSequence([1.0, np.nan])


@given(seed=st.integers(0, 2 ** 32 - 1), N=st.integers(1, 8))
@settings(max_examples=200, deadline=None)
def test_almost_orthogonality(seed, N):
    rng = np.random.default_rng(seed)
    units = near_orthogonal_units(rng, N)
    g = rng.normal(size=64) * rng.uniform(0.1, 10)
    r = osc.almost_orthogonality_check(g, units)
    assert r.applicable and r.alpha < 1
    assert r.holds


def test_almost_orthogonality_orthonormal_is_bessel():
    rng = np.random.default_rng(3)
    units = near_orthogonal_units(rng, 5, noise=0.0)
    g = rng.normal(size=64)
    r = osc.almost_orthogonality_check(g, units)
    assert r.alpha < 1e-12 and r.lhs <= osc.weighted_inner_product(g, g) + 1e-10


def test_almost_orthogonality_guards():
    e = osc.WeightedSequence(np.ones(4)).normalized()
    with pytest.raises(ValueError):
        osc.almost_orthogonality_check(np.ones(4), [osc.WeightedSequence(np.ones(4))])
    r = osc.almost_orthogonality_check(np.ones(4), [e, e])
    assert not r.applicable and r.alpha >= 1
