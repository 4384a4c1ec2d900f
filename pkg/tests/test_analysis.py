import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairalloc.analysis import (ParetoPoint, check_pf_inequality, is_dominated, pareto_filter,
                                sample_feasible, surplus_rows, sweep_alpha,
                                verify_pareto_optimality)
from fairalloc.fairness import FairnessParam
from fairalloc.model import surplus_profile
from fairalloc.outer import default_l_max, solve
from fairalloc.scenarios import RandomSpec, gen_pofpoe_users

F = FairnessParam
SWEEP = [F.alpha(0), F.alpha(0.5), F.alpha(1), F.alpha(2), F.maxmin()]


def test_is_dominated_examples():
    assert is_dominated([1, 1], [[2, 1]])
    assert not is_dominated([1, 2], [[2, 1]])
    assert not is_dominated([1, 1], [[1, 1]])
    assert not is_dominated([1, 1], [])


def test_is_dominated_shape():
    with pytest.raises(ValueError):
        is_dominated([1, 1], [[1, 1, 1]])


def test_pareto_filter_examples():
    assert pareto_filter([(1, 1), (2, 2)]) == [(2, 2)]
    chain = [(1, 3), (2, 2), (3, 1)]
    assert pareto_filter(chain) == chain
    assert pareto_filter([(1, 1), (1, 1)]) == [(1, 1), (1, 1)]


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)), max_size=25))
def test_pareto_filter_antichain(points):
    kept = pareto_filter(points)
    for i, a in enumerate(kept):
        assert not is_dominated(a, [b for j, b in enumerate(kept) if j != i])
    # everything removed is beaten by something kept
    for p in points:
        if p not in kept:
            assert is_dominated(p, kept)


def test_pareto_filter_on_points(two_user):
    pts = sweep_alpha(two_user, SWEEP)
    assert len(pareto_filter(pts)) == len(pts)


def test_sweep_single_anchor(two_user):
    (p,) = sweep_alpha(two_user, [F.alpha(0)])
    assert p.pof == 0.0
    (p,) = sweep_alpha(two_user, [F.maxmin()])
    assert p.poe == 0.0


def test_sweep_two_user_orderings(two_user):
    pts = sweep_alpha(two_user, SWEEP)
    totals = [p.total_surplus for p in pts]
    minima = [p.min_surplus for p in pts]
    assert all(a > b for a, b in zip(totals, totals[1:]))
    assert all(a < b for a, b in zip(minima, minima[1:]))
    for p in pts:
        assert p.total_surplus == float(np.sum(p.s))
        assert p.min_surplus == float(np.min(p.s))
        assert -1e-9 <= p.pof <= 1 and -1e-9 <= p.poe <= 1


def test_sweep_anchors_exact():
    sc = gen_pofpoe_users(RandomSpec(5, n_users=4))
    pts = sweep_alpha(sc, [F.alpha(1), F.maxmin(), F.alpha(0)])
    assert pts[2].pof == 0.0 and pts[1].poe == 0.0
    assert pts[0].pof >= -1e-9 and pts[0].poe >= -1e-9


def test_check_pf_inequality_examples(two_user):
    s_pf = solve(two_user, F.alpha(1)).s
    assert check_pf_inequality(s_pf, [s_pf]).max_value == 0.0
    rep = check_pf_inequality(s_pf, [np.zeros(2)])
    assert rep.max_value == -2 and rep.ok
    with pytest.raises(ValueError):
        check_pf_inequality([0.0, 1.0], [[1, 1]])


def test_check_pf_inequality_flags_violation():
    rep = check_pf_inequality([1.0, 1.0], [[1.0, 1.0], [1.5, 0.9], [0.5, 0.5]])
    assert rep.violations == (1,) and rep.max_value == pytest.approx(0.4)


def test_pf_inequality_random_two_user():
    sc = gen_pofpoe_users(RandomSpec(17, n_users=2))
    s_pf = solve(sc, F.alpha(1)).s
    x, l = sample_feasible(sc, 1000, np.random.default_rng(0))
    assert check_pf_inequality(s_pf, surplus_rows(sc, x, l)).max_value <= 1e-6


@given(seed=st.integers(0, 2**32))
def test_samples_are_feasible(seed):
    sc = gen_pofpoe_users(RandomSpec(seed % 1000, n_users=1 + seed % 4))
    x, l = sample_feasible(sc, 50, np.random.default_rng(seed))
    assert x.shape == (50, sc.n) and np.all(x >= 0)
    np.testing.assert_allclose(x.sum(axis=1), l, rtol=1e-12)
    assert np.all(l > 0) and np.all(l <= default_l_max(sc))
    assert np.all(surplus_rows(sc, x, l) >= 0)
    for k in range(3):
        np.testing.assert_allclose(surplus_rows(sc, x, l)[k], surplus_profile(sc, x[k], l[k]))


def test_solver_answers_are_pareto_optimal(two_user):
    for f in SWEEP:
        res = solve(two_user, f)
        rep = verify_pareto_optimality(res, two_user, 2000, seed=1)
        assert rep.pareto_optimal, (f, rep.witness)


def test_result_itself_is_not_dominating(two_user):
    res = solve(two_user, F.alpha(1))
    rep = verify_pareto_optimality(res, two_user, 1, seed=0, near_fraction=0.0)
    assert rep.n_probes == 1 and rep.pareto_optimal


def test_negative_control_scaled_down(two_user):
    res = solve(two_user, F.maxmin())
    x, l = res.x / 4, res.l / 4
    worse = dataclasses.replace(res, x=x, l=l, s=surplus_profile(two_user, x, l))
    rep = verify_pareto_optimality(worse, two_user, 2000, seed=0)
    assert not rep.pareto_optimal
    assert np.all(rep.witness >= worse.s)


def test_negative_control_small_loss(two_user):
    res = solve(two_user, F.alpha(1))
    dented = dataclasses.replace(res, s=res.s - np.array([1e-4, 0.0]))
    assert not verify_pareto_optimality(dented, two_user, 2000, seed=0).pareto_optimal


def test_pareto_point_from_result(two_user):
    res = solve(two_user, F.alpha(2))
    p = ParetoPoint.from_result(res, 0.1, 0.2)
    assert p.l == res.l and p.pof == 0.1 and p.total_surplus == res.total_surplus
