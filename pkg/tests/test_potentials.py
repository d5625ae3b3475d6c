import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speclab.potentials import Potential, cutoff, eval_potential, verify_bound

import oracles

FAMILIES = [
    Potential.zero(),
    Potential.power_decay(1.5, 1.0),
    Potential.power_decay(0.7, 2.0),
    Potential.wigner_von_neumann(2.0, 0.3, 0.4),
    Potential.seeded_random(0.4, 11),
    Potential.sampled([0.0, -5.0, 0.25, 1e-3]),
]


def test_closed_forms():
    assert Potential.wigner_von_neumann(2.0, 0.25, 0.0)(1) == pytest.approx(1.0, abs=1e-15)
    assert Potential.power_decay(1.0)(0) == 1.0
    assert Potential.power_decay(2.0, 2.0)(3) == pytest.approx(2.0 / 16)
    assert Potential.zero()(10 ** 9) == 0.0
    V = oracles.potential_list("wvn", 500, c=1.3, k0=0.3, phi=0.7)
    p = Potential.wigner_von_neumann(1.3, 0.3, 0.7)
    np.testing.assert_allclose(p.values(0, 502), V, rtol=0, atol=1e-15)


def test_sampled_table_zero_beyond():
    p = Potential.sampled([1.0, 2.0, 3.0])
    assert list(p.values(0, 6)) == [1.0, 2.0, 3.0, 0.0, 0.0, 0.0]
    assert list(p.values(2, 4)) == [3.0, 0.0]


@pytest.mark.parametrize("p", FAMILIES, ids=lambda p: p.family)
@given(start=st.integers(0, 10 ** 6), width=st.integers(1, 300))
@settings(max_examples=25, deadline=None)
def test_values_match_pointwise(p, start, width):
    v = p.values(start, start + width)
    idx = [start, start + width // 2, start + width - 1]
    assert [v[i - start] for i in idx] == [eval_potential(p, i) for i in idx]


@given(seed=st.integers(0, 2 ** 31), a=st.integers(0, 200_000), b=st.integers(1, 70_000))
@settings(max_examples=25, deadline=None)
def test_random_reproducible_across_ranges(seed, a, b):
    p = Potential.seeded_random(1.0, seed)
    q = Potential.seeded_random(1.0, seed)
    whole = q.values(0, a + b)
    np.testing.assert_array_equal(p.values(a, a + b), whole[a:])


def test_random_seeds_differ():
    a = Potential.seeded_random(1.0, 1).values(0, 100)
    b = Potential.seeded_random(1.0, 2).values(0, 100)
    assert not np.allclose(a, b)


@given(L=st.integers(1, 500), L2=st.integers(1, 500))
@settings(max_examples=40, deadline=None)
def test_cutoff_properties(L, L2):
    p = Potential.power_decay(1.0)
    q = cutoff(p, L)
    v = q.values(0, L + 50)
    np.testing.assert_array_equal(v[: L + 1], p.values(0, L + 1))
    assert np.all(v[L + 1:] == 0.0)
    assert cutoff(q, L) == q
    assert cutoff(q, L2).cutoff == min(L, L2)


def test_cutoff_rejects_nonpositive():
    with pytest.raises(ValueError):
        cutoff(Potential.zero(), 0)


@pytest.mark.parametrize("p", FAMILIES[:5], ids=lambda p: p.family)
def test_declared_bound_holds(p):
    assert verify_bound(p, p.declared_bound, 10 ** 5) == (True, None)


def test_verify_bound_reports_first_violation():
    p = Potential.sampled([0.0, 0.1, 2.0, 0.0])
    assert verify_bound(p, 1.0, 10) == (False, 2)
    assert verify_bound(Potential.wigner_von_neumann(1, 0.3), 1.0, 10 ** 5) == (True, None)
    assert verify_bound(Potential.power_decay(2.0), 1.0, 10) == (False, 0)


def test_slow_decay_has_no_declared_bound():
    assert Potential.power_decay(1.0, 0.5).declared_bound is None


@pytest.mark.parametrize("p", FAMILIES + [cutoff(Potential.power_decay(1.0), 40)],
                         ids=lambda p: p.family)
def test_spec_round_trip(p):
    q = Potential.from_spec(p.to_spec())
    np.testing.assert_array_equal(q.values(0, 100), p.values(0, 100))
    assert q.cutoff == p.cutoff


@pytest.mark.parametrize("bad", [
    lambda: Potential.power_decay(-1.0),
    lambda: Potential.power_decay(1.0, 0.0),
    lambda: Potential.wigner_von_neumann(1.0, 1.2),
    lambda: Potential.seeded_random(-0.1, 0),
    lambda: Potential("nope"),
    lambda: Potential.from_spec({"potential": "nope"}),
    lambda: Potential.zero().values(5, 2),
    lambda: eval_potential(Potential.zero(), -1),
])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        bad()


def test_wvn_phase_reduced_exactly_at_large_n():
    # 2 pi k0 n loses digits at n ~ 1e12; the reduced phase must not
    p = Potential.wigner_von_neumann(1.0, 0.25, 0.0)
    n = 10 ** 12 + 1
    assert p(n) == pytest.approx(math.sin(math.pi / 2) / (1 + n), rel=1e-12)
