import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairalloc.inner import feasible_box
from fairalloc.model import Scenario
from fairalloc.scenarios import RandomSpec, gen_pofpoe_users, gen_two_class, generate, user_streams

seeds = st.integers(0, 2**63)


@given(seed=seeds, n=st.integers(1, 30))
def test_pofpoe_ranges(seed, n):
    sc = gen_pofpoe_users(RandomSpec(seed, n_users=n))
    a, b = sc.q, sc.b
    assert sc.n == n
    assert np.all((a >= 1) & (a <= 2))
    assert np.all(b >= 1 + 10 * (a + 1)) and np.all(b <= 11 + 10 * (a + 1))
    assert sc.cost.c2 == 1 and sc.cost.c1 == 0


@given(seed=seeds, l=st.floats(0, 40))
def test_pofpoe_box_matches_bound(seed, l):
    sc = gen_pofpoe_users(RandomSpec(seed, n_users=3))
    ub = feasible_box(sc, l)
    expected = np.where(sc.b > l, 2 * (sc.b - l) / sc.q, 0.0)
    np.testing.assert_array_equal(ub, expected)
    assert np.all(ub[sc.b > l] > 0)


@given(seed=seeds)
def test_deterministic(seed):
    for fam in ("pofpoe", "twoclass"):
        spec = RandomSpec(seed, n_users=5, family=fam)
        assert generate(spec).to_json() == generate(spec).to_json()


def test_prefix_stable():
    small = gen_pofpoe_users(RandomSpec(9, n_users=3))
    big = gen_pofpoe_users(RandomSpec(9, n_users=8))
    assert big.users[:3] == small.users


def test_pofpoe_mean_curvature():
    a = np.concatenate([gen_pofpoe_users(RandomSpec(s, n_users=1000)).q for s in range(100)])
    assert a.size == 10**5
    assert abs(a.mean() - 1.5) <= 0.01 * 1.5


@given(seed=seeds, xbar=st.floats(0.5, 50))
def test_two_class(seed, xbar):
    sc = gen_two_class(RandomSpec(seed, family="twoclass", xbar=xbar))
    assert sc.labels == ("class1",) * 10 + ("class2",) * 10
    assert np.all(sc.b / sc.q == xbar)
    assert np.all((sc.q[:10] >= 1) & (sc.q[:10] <= 2))
    assert np.all((sc.q[10:] >= 3) & (sc.q[10:] <= 4))


def test_class_sizes():
    sc = gen_two_class(RandomSpec(1, family="twoclass", class_sizes=(3, 7)))
    assert sc.labels.count("class1") == 3 and sc.labels.count("class2") == 7


def test_trial_seeds():
    spec = RandomSpec(100, n_users=2)
    assert spec.for_trial(5).seed == 105


def test_generated_scenarios_replay():
    sc = gen_two_class(RandomSpec(4, family="twoclass"))
    assert Scenario.from_json(sc.to_json()) == sc


def test_bad_specs():
    with pytest.raises(ValueError):
        RandomSpec(1, family="threeclass")
    with pytest.raises(ValueError):
        RandomSpec(-1)
    with pytest.raises(ValueError):
        RandomSpec(1, n_users=0)
    with pytest.raises(ValueError):
        gen_two_class(RandomSpec(1))
    with pytest.raises(ValueError):
        RandomSpec(1, family="twoclass", xbar=0)


def test_streams_are_pcg64():
    g = user_streams(0, 2)
    assert isinstance(g[0].bit_generator, np.random.PCG64)
    assert g[0].random() != g[1].random()
