import math

import numpy as np
import pytest
from hypothesis import given, settings

from smoothrenyi import (arimoto_conditional, bes, bss, check_h, cond_stats, constant_profile, delta_profile,
                         kuzuoka_h, make_dist, make_joint, shannon_entropy, smooth_conditional, smooth_renyi, tilde_h)
from smoothrenyi.conditional_smooth import bar_h, check_h_direct, kuzuoka_h_dp_grid, kuzuoka_h_joint_grid
from smoothrenyi.dist import product_joint

from conftest import alphas, epsilons, joints

PX = [0.6, 0.3, 0.1]
INDEP = product_joint(PX, [0.45, 0.55])
SINGLE = make_joint([[v] for v in PX])


def test_bar_h_examples():
    j = make_joint([[0.3, 0.1], [0.2, 0.05], [0.05, 0.3]])
    assert bar_h(j, 0.5, [0.0, 0.0]) == pytest.approx(arimoto_conditional(j, 0.5), abs=1e-12)
    assert bar_h(j, 0.5, [1.0, 1.0]) == -math.inf
    assert bar_h(SINGLE, 0.4, [0.2]) == pytest.approx(smooth_renyi(make_dist(PX), 0.4, 0.2), abs=1e-12)


def test_check_h_examples():
    assert check_h(bss(0.1), 0.5, 0.0) == pytest.approx(arimoto_conditional(bss(0.1), 0.5), abs=1e-12)
    assert check_h(INDEP, 0.5, 0.2) == pytest.approx(smooth_renyi(make_dist(PX), 0.5, 0.2), abs=1e-12)
    assert check_h(bss(0.1), 0.5, 0.2) == pytest.approx(check_h_direct(bss(0.1), 0.5, 0.2), abs=1e-9)


@given(joints(), alphas, epsilons)
@settings(max_examples=50, deadline=None)
def test_check_h_two_paths(j, a, e):
    assert check_h(j, a, e) == pytest.approx(check_h_direct(j, a, e), abs=1e-9)


def test_kuzuoka_single_y():
    r = kuzuoka_h(SINGLE, 0.5, 0.2)
    assert r.value == pytest.approx(smooth_renyi(make_dist(PX), 0.5, 0.2), abs=1e-12)
    assert r.profile.delta == pytest.approx((0.2,), abs=1e-12)


def test_kuzuoka_independent_against_joint_grid():
    # unequal per-y budgets beat the constant one even under independence; the joint-ball
    # search confirms the lower value, so only the constant-profile bound is asserted
    j = product_joint([0.7, 0.3], [0.4, 0.6])
    r = kuzuoka_h(j, 0.5, 0.2)
    assert r.value <= smooth_renyi(make_dist([0.7, 0.3]), 0.5, 0.2) + 1e-12
    grid = kuzuoka_h_joint_grid(j, 0.5, 0.2, 0.005)
    assert r.value - 1e-9 <= grid <= r.value + 0.02
    assert r.value == pytest.approx(0.1822651592060, abs=1e-9)


def test_kuzuoka_bes_sandwich():
    v = kuzuoka_h(bes(0.2), 0.5, 0.1).value
    assert v <= check_h(bes(0.2), 0.5, 0.1) + 1e-9
    assert v >= kuzuoka_h_joint_grid(bes(0.2), 0.5, 0.1, 0.01) - 0.02


def test_dp_grid_examples():
    j = bss(0.1)
    assert kuzuoka_h_dp_grid(j, 0.5, 0.2, 0.005) <= check_h(j, 0.5, 0.2) + 1e-9
    assert abs(kuzuoka_h_dp_grid(j, 0.5, 0.2, 0.005) - kuzuoka_h(j, 0.5, 0.2).value) <= 0.02
    assert kuzuoka_h_dp_grid(SINGLE, 0.5, 0.3, 0.01) == pytest.approx(smooth_renyi(make_dist(PX), 0.5, 0.3), abs=1e-9)


def test_joint_grid_examples():
    j = make_joint([[0.25, 0.25], [0.25, 0.25]])
    assert kuzuoka_h_joint_grid(j, 0.5, 0.0, 0.01) == pytest.approx(arimoto_conditional(j, 0.5), abs=1e-12)
    assert abs(kuzuoka_h_joint_grid(j, 0.5, 0.25, 0.005) - kuzuoka_h(j, 0.5, 0.25).value) <= 0.03


@given(joints(max_x=3, max_y=2), alphas, epsilons)
@settings(max_examples=25, deadline=None)
def test_kuzuoka_triple_path(j, a, e):
    v = kuzuoka_h(j, a, e).value
    assert v <= check_h(j, a, e) + 1e-9
    assert kuzuoka_h_joint_grid(j, a, e, 0.02) >= v - 1e-9
    dp = kuzuoka_h_dp_grid(j, a, e, 0.01)
    assert v - 1e-9 <= dp <= v + 0.03


@given(joints(), alphas, epsilons)
@settings(max_examples=50, deadline=None)
def test_kuzuoka_profile_feasible(j, a, e):
    r = kuzuoka_h(j, a, e)
    py = np.asarray(j.y_marginal.probs)
    d = np.asarray(r.profile.delta)
    assert np.all((d >= 0) & (d <= 1))
    assert float(py @ d) <= e + 1e-9
    assert bar_h(j, a, r.profile) == pytest.approx(r.value, abs=1e-9)


def test_smooth_conditional_alias():
    assert smooth_conditional(bss(0.1), 0.5, 0.0) == pytest.approx(arimoto_conditional(bss(0.1), 0.5))
    assert smooth_conditional(bss(0.1), 0.5, 0.2) == pytest.approx(kuzuoka_h(bss(0.1), 0.5, 0.2).value)


def test_tilde_h_single_y_sandwich():
    d = make_dist(PX)
    for e in (0.05, 0.2, 0.5):
        h = smooth_renyi(d, 0.5, e)
        t = tilde_h(SINGLE, 0.5, e)
        assert h - 1e-9 <= t <= h + math.log2(1 + shannon_entropy(d) / e) + 1e-9


def test_tilde_h_bss():
    k = kuzuoka_h(bss(0.1), 0.5, 0.2).value
    t = tilde_h(bss(0.1), 0.5, 0.2)
    assert k <= t + 1e-9
    assert t - k <= math.log2(1 + cond_stats(bss(0.1)).H_cond / 0.2) + 1e-9


@given(joints(), alphas, epsilons)
@settings(max_examples=50, deadline=None)
def test_tilde_h_sandwich(j, a, e):
    k = kuzuoka_h(j, a, e).value
    t = tilde_h(j, a, e)
    assert k - 1e-9 <= t <= k + math.log2(1 + cond_stats(j).H_cond / e) + 1e-9


def test_delta_profile_validation():
    with pytest.raises(ValueError):
        delta_profile(bss(0.1), [0.2, 1.5])
    p = constant_profile(bss(0.1), 0.3)
    assert p.delta == (0.3, 0.3)
