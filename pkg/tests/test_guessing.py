import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from smoothrenyi import (bes, bss, guess_moment, joint_iid_power, make_dist, make_joint,
                         one_shot_guess_check, optimal_strategy_avg, optimal_strategy_max, simulate)
from smoothrenyi.dist import product_joint
from smoothrenyi.guessing import (GuessStrategy, bruteforce_guess, conditional_errors, error_probability,
                                  explicit_policy, guess_moment_tailsum)

from conftest import epsilons, joints

P3 = make_joint([[0.5], [0.3], [0.2]])
ROWS = make_joint([[0.45, 0.3], [0.05, 0.2]])  # uniform Y, rows (0.9, 0.1) and (0.6, 0.4)


def test_lemma8_hand_example():
    strat, lim = optimal_strategy_avg(P3, 0.2, 1.0)
    assert lim.J == 1 and lim.xi == pytest.approx(0.3)
    pol = strat.policy[0]
    assert pol.pi(1) == 0.0 and pol.pi(2) == pytest.approx(0.0, abs=1e-12) and pol.pi(3) == 1.0
    assert lim.moment.value == pytest.approx(1.1, abs=1e-12)
    assert lim.error_avg == pytest.approx(0.2, abs=1e-12)


def test_vanishing_budget_is_massey_order():
    _, lim = optimal_strategy_avg(P3, 1e-9, 1.0)
    assert lim.moment.value == pytest.approx(0.5 + 0.6 + 0.6, abs=1e-8)


def test_avg_cutoffs_binary_y():
    _, lim = optimal_strategy_avg(ROWS, 0.2, 1.0)
    assert lim.J == 1 and lim.xi == pytest.approx(0.05, abs=1e-12)


def test_max_cutoffs_binary_y():
    strat, lim = optimal_strategy_max(ROWS, 0.2, 1.0)
    assert lim.J == (0, 1)
    assert lim.xi == pytest.approx((0.8, 0.2), abs=1e-12)
    assert conditional_errors(strat, ROWS) == pytest.approx((0.2, 0.2), abs=1e-12)


def test_max_degenerate_row():
    j = make_joint([[0.5, 0.2], [0.0, 0.3]])
    strat, lim = optimal_strategy_max(j, 0.25, 1.0)
    assert lim.J[0] == 0 and lim.xi[0] == pytest.approx(0.75)
    assert conditional_errors(strat, j) == pytest.approx((0.25, 0.25), abs=1e-12)


def test_max_equals_avg_under_independence():
    j = product_joint([0.5, 0.3, 0.2], [0.4, 0.6])
    _, a = optimal_strategy_avg(j, 0.2, 1.0)
    _, m = optimal_strategy_max(j, 0.2, 1.0)
    assert m.J == (a.J, a.J) and m.xi == pytest.approx((a.xi, a.xi))
    assert m.moment.value == pytest.approx(a.moment.value, abs=1e-12)


def test_guess_moment_examples():
    u4 = make_joint([[0.25]] * 4)
    strat = GuessStrategy(((0, 1, 2, 3),), (explicit_policy([0, 0, 0, 0]),))
    assert guess_moment(strat, u4, 1.0).value == pytest.approx(2.5)
    _, lim = optimal_strategy_avg(P3, 0.2, 2.0)
    assert lim.moment.value == pytest.approx(1.7, abs=1e-12)


@given(joints(), epsilons)
@settings(max_examples=50, deadline=None)
def test_errors_equal_budget(j, e):
    s, lim = optimal_strategy_avg(j, e, 1.0)
    assert error_probability(s, j) == pytest.approx(e, abs=1e-12)
    s, lim = optimal_strategy_max(j, e, 1.0)
    assert conditional_errors(s, j) == pytest.approx((e,) * j.shape[1], abs=1e-12)


@given(joints(), epsilons)
@settings(max_examples=40, deadline=None)
def test_tail_sum_identity(j, e):
    for rho in (0.5, 1.0, 2.0):
        s, lim = optimal_strategy_avg(j, e, rho)
        assert guess_moment_tailsum(s, j, rho) == pytest.approx(lim.moment.value, rel=1e-10, abs=1e-14)


def _product(j, n):
    a = j.as_array()
    nx, ny = a.shape
    m = np.zeros((nx ** n, ny ** n))
    for xs in itertools.product(range(nx), repeat=n):
        for ys in itertools.product(range(ny), repeat=n):
            xi = int(np.ravel_multi_index(xs, (nx,) * n))
            yi = int(np.ravel_multi_index(ys, (ny,) * n))
            m[xi, yi] = math.prod(a[x, y] for x, y in zip(xs, ys))
    return make_joint(m.tolist())


@pytest.mark.parametrize("j", [bss(0.1), bes(0.2)])
@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_type_family_matches_explicit_product(j, rho):
    n, eps = 3, 0.2
    fam = joint_iid_power(j, n)
    explicit = _product(j, n)
    for make in (optimal_strategy_avg, optimal_strategy_max):
        _, lf = make(fam, eps, rho)
        _, le = make(explicit, eps, rho)
        assert lf.moment.value == pytest.approx(le.moment.value, rel=1e-10)
        assert lf.error_avg == pytest.approx(le.error_avg, abs=1e-12)


def test_one_shot_examples():
    rep = one_shot_guess_check(P3, 1.0, 0.2)
    assert rep.avg_lower - 1e-9 <= rep.avg_moment <= rep.avg_upper + 1e-9
    rep = one_shot_guess_check(bss(0.1), 2.0, 0.3)
    assert rep.max_lower - 1e-9 <= rep.max_moment <= rep.max_upper + 1e-9
    rep = one_shot_guess_check(product_joint([0.6, 0.3, 0.1], [0.5, 0.5]), 1.0, 0.2)
    assert rep.avg_moment == pytest.approx(rep.max_moment, abs=1e-12)


@given(joints(), epsilons)
@settings(max_examples=40, deadline=None)
def test_sandwich_property(j, e):
    for rho in (0.5, 1.0, 2.0):
        one_shot_guess_check(j, rho, e)


@pytest.mark.parametrize("p", [(0.5, 0.3, 0.2), (0.6, 0.25, 0.15), (0.4, 0.35, 0.25)])
@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_bruteforce_never_beats_lemma8(p, eps):
    _, lim = optimal_strategy_avg(make_joint([[v] for v in p]), eps, 1.0)
    best, _ = bruteforce_guess(make_dist(list(p)), 1.0, eps, 0.05)
    assert best >= lim.moment.log_scaled - 0.05


def test_simulation_agrees_with_exact():
    strat, lim = optimal_strategy_avg(P3, 0.2, 1.0)
    n = 1_000_000
    r = simulate(strat, P3, 1.0, n, seed=7)
    assert abs(r.error - 0.2) <= 3 * math.sqrt(0.2 * 0.8 / n)
    assert abs(r.moment - 1.1) <= 3 * r.stderr_moment


def test_simulation_deterministic():
    strat, _ = optimal_strategy_avg(ROWS, 0.2, 1.0)
    a = simulate(strat, ROWS, 1.0, 50_000, seed=11)
    b = simulate(strat, ROWS, 1.0, 50_000, seed=11)
    assert a == b
    assert simulate(strat, ROWS, 1.0, 50_000, seed=12) != a
