import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairalloc.fairness import (FairnessParam, phi, phi_gradient, price_of_efficiency,
                                price_of_fairness)

F = FairnessParam
ALPHAS = [F.alpha(0), F.alpha(0.5), F.alpha(1), F.alpha(2), F.alpha(3.5), F.maxmin()]
profiles = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8).map(np.array)


def test_phi_examples():
    assert phi([1, 2, 3], F.alpha(0)) == 6
    assert phi([1, 1], F.alpha(1)) == 0
    assert phi([2], F.alpha(2)) == -0.5
    assert phi([3, 1, 2], F.maxmin()) == 1


def test_phi_rejects_negative():
    with pytest.raises(ValueError):
        phi([1, -1e-12], F.alpha(0))


@pytest.mark.parametrize("a", [1.0, 2.0, 1 + 5e-10])
def test_zero_surplus_is_minus_infinity(a):
    assert phi([0.0, 1.0], F.alpha(a)) == -math.inf


def test_zero_surplus_finite_below_one():
    assert phi([0.0, 4.0], F.alpha(0.5)) == pytest.approx(4.0)


def test_log_window():
    assert F.alpha(1 + 1e-10).is_log
    assert F.alpha(1 - 9e-10).value == 1.0
    assert not F.alpha(1 + 1e-8).is_log


def test_phi_rows():
    s = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(phi(s, F.alpha(0)), [3, 7])


@pytest.mark.parametrize("text,expected", [("inf", F.maxmin()), ("0", F.alpha(0)),
                                           ("0.5", F.alpha(0.5)), ("Infinity", F.maxmin())])
def test_parse(text, expected):
    assert F.parse(text) == expected


@pytest.mark.parametrize("bad", ["-1", "nan", "abc"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        F.parse(bad)


def test_gradient_examples():
    np.testing.assert_array_equal(phi_gradient([1, 1], F.alpha(1)), [1, 1])
    np.testing.assert_array_equal(phi_gradient([4], F.alpha(0.5)), [0.5])
    np.testing.assert_array_equal(phi_gradient([2, 5], F.alpha(0)), [1, 1])


def test_gradient_errors():
    with pytest.raises(ValueError):
        phi_gradient([1, 2], F.maxmin())
    with pytest.raises(ValueError):
        phi_gradient([0, 2], F.alpha(1))


@given(s=profiles, data=st.data())
def test_phi_strictly_increasing(s, data):
    i = data.draw(st.integers(0, len(s) - 1))
    bump = data.draw(st.floats(1e-2, 10.0))
    t = s.copy()
    t[i] += bump
    for f in ALPHAS:
        before, after = phi(s, f), phi(t, f)
        if f.is_maxmin:
            assert after >= before
            if np.sum(s == s.min()) == 1 and s[i] == s.min():
                assert after > before
        else:
            # a change smaller than one ulp of the total cannot show up in floating point
            step = phi(t[i:i + 1], f) - phi(s[i:i + 1], f)
            assert step > 0
            if step > 1e-12 * abs(before):
                assert after > before


@given(s=profiles, data=st.data())
def test_phi_concave(s, data):
    t = np.array(data.draw(st.lists(st.floats(1e-3, 1e3), min_size=len(s), max_size=len(s))))
    w = data.draw(st.floats(0, 1))
    for f in ALPHAS:
        mid = phi(w * s + (1 - w) * t, f)
        chord = w * phi(s, f) + (1 - w) * phi(t, f)
        assert mid >= chord - 1e-9 * (1 + abs(chord))


@given(s=profiles)
def test_gradient_matches_finite_differences(s):
    for f in ALPHAS[:4]:
        g = phi_gradient(s, f)
        for i in range(len(s)):
            h = 1e-6 * s[i]
            up, dn = s.copy(), s.copy()
            up[i] += h
            dn[i] -= h
            fd = (phi(up, f) - phi(dn, f)) / (2 * h)
            assert abs(fd - g[i]) <= 1e-6 * abs(g[i]) + 1e-9 * max(abs(phi(s, f)), 1) / h


def test_alpha_near_one_argmax():
    # fixed finite menu of positive profiles; the argmax is stable across the log window
    rng = np.random.default_rng(3)
    menu = rng.uniform(0.1, 5.0, size=(200, 3))
    best = np.argmax(phi(menu, F.alpha(1)))
    for a in (0.999, 1.001):
        assert np.argmax(phi(menu, F.alpha(a))) == best


# reference values: two-user example totals 3.656 (SW), 3.232 (PF), 1.954 (max-min);
# minima 0.281 (SW), 0.668 (PF), 0.977 (max-min)
@pytest.mark.parametrize("system,total,expected", [(3.656, 3.232, 0.1160), (3.656, 1.954, 0.4656),
                                                   (3.656, 3.656, 0.0)])
def test_price_of_fairness(system, total, expected):
    assert price_of_fairness(system, total) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("level,smin,expected", [(0.977, 0.668, 0.3163), (0.977, 0.281, 0.7124),
                                                 (0.977, 0.977, 0.0)])
def test_price_of_efficiency(level, smin, expected):
    assert price_of_efficiency(level, smin) == pytest.approx(expected, abs=1e-4)


def test_ratio_errors():
    with pytest.raises(ValueError):
        price_of_fairness(0.0, 1.0)
    with pytest.raises(ValueError):
        price_of_efficiency(-1.0, 0.0)
