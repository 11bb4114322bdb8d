import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothrenyi import (PreconditionError, assignment_avg, assignment_max, bl_partition, bss, make_joint,
                         one_shot_task_check)
from smoothrenyi.dist import product_joint
from smoothrenyi.measures import conditional_entropy
from smoothrenyi.tasks import (INF, TaskAssignment, avg_threshold, bl_threshold, ceiling_bound_holds,
                               lambda_profile_avg, lambda_profile_max, max_threshold, task_error, task_errors,
                               task_moment)

from conftest import epsilons, joints

P3 = make_joint([[0.5], [0.3], [0.2]])


def _check_caps(cells, caps):
    seen = [s for c in cells for s in c]
    assert sorted(seen, key=repr) == sorted(caps, key=repr)
    for c in cells:
        assert all(len(c) <= caps[s] for s in c)


def test_lambda_profile_example():
    prof = lambda_profile_avg(P3, 1.0, 0.2, 20)
    col = prof.column(0)
    assert col[0] != INF and col[1] != INF and col[2] == INF
    inv = math.fsum(1 / v for v in col.values() if v != INF)
    assert inv <= (0.2 * 18 - conditional_entropy(P3)) / (2 * 0.2)


def test_lambda_profile_gate():
    with pytest.raises(PreconditionError):
        lambda_profile_avg(P3, 1.0, 0.2, 3)
    with pytest.raises(PreconditionError):
        lambda_profile_max(bss(0.1), 1.0, 0.2, int(max_threshold(bss(0.1), 0.2)))


@given(joints(), st.sampled_from([0.5, 1.0, 2.0]), epsilons, st.integers(1, 40))
@settings(max_examples=60, deadline=None)
def test_inverse_lambda_budget(j, rho, e, extra):
    M = int(avg_threshold(j, e)) + extra
    slack = e * (M - 2) - conditional_entropy(j)
    prof = lambda_profile_avg(j, rho, e, M)
    for y in range(j.shape[1]):
        inv = math.fsum(1 / v for v in prof.column(y).values() if v != INF)
        assert inv <= slack / (2 * e) + 1e-9


def test_bl_partition_examples():
    caps = {"a": 1, "b": 2, "c": 2, "d": 4}
    cells = bl_partition(caps, 9)
    assert len(cells) <= 9
    _check_caps(cells, caps)
    assert cells == (("a",), ("b", "c"), ("d",))
    ones = {k: 1 for k in range(5)}
    assert bl_partition(ones, math.ceil(bl_threshold(ones))) == tuple((k,) for k in range(5))


def test_bl_partition_below_threshold():
    with pytest.raises(PreconditionError):
        bl_partition({"a": 1, "b": 1, "c": 1}, 3)


@given(st.lists(st.integers(1, 12), min_size=12, max_size=12))
@settings(max_examples=200, deadline=None)
def test_bl_partition_at_threshold(lams):
    caps = dict(enumerate(lams))
    M = math.ceil(bl_threshold(caps))
    cells = bl_partition(caps, M)
    assert len(cells) <= M
    _check_caps(cells, caps)


@given(st.lists(st.integers(1, 30), min_size=1, max_size=40))
@settings(max_examples=200, deadline=None)
def test_greedy_cell_count_bound(lams):
    # ascending greedy never needs more than 2 sum 1/lambda + log2 |S| + 1 cells
    caps = dict(enumerate(lams))
    cells = bl_partition(caps, math.ceil(bl_threshold(caps)))
    assert len(cells) <= 2 * math.fsum(1 / v for v in lams) + math.log2(len(lams)) + 1 + 1e-9


def test_assignment_avg_example():
    a = assignment_avg(P3, 1.0, 0.2, 20)
    assert task_error(a, P3) == pytest.approx(0.2, abs=1e-12)
    rep = one_shot_task_check(P3, 1.0, 0.2, 20)
    assert rep.avg_moment <= rep.avg_bound


def test_assignment_large_m_gives_singletons():
    a = assignment_avg(P3, 1.0, 0.2, 2 ** 10)
    assert all(len(c) == 1 for c in a.cells[0])
    assert task_moment(a, P3, 1.0).value == pytest.approx(0.8, abs=1e-12)


def test_zero_entropy_rows_give_unit_cells():
    j = make_joint([[0.4, 0.0], [0.0, 0.6]])
    for make in (assignment_avg, assignment_max):
        a = make(j, 1.0, 0.1, 5)
        for y in range(2):
            for x in range(2):
                if a.f[x][y]:
                    assert len(a.cell_of(x, y)) == 1


def test_assignment_max_two_rows():
    j = make_joint([[0.45, 0.3], [0.05, 0.2]])
    a = assignment_max(j, 1.0, 0.2, 30)
    assert task_errors(a, j) == pytest.approx((0.2, 0.2), abs=1e-12)
    prof = lambda_profile_max(j, 1.0, 0.2, 30)
    for y in range(2):
        for m, c in enumerate(a.cells[y], start=1):
            assert all(len(c) <= prof.caps[x][y] for x in c)


def test_assignment_max_reduces_to_avg_under_independence():
    j = product_joint([0.5, 0.3, 0.2], [0.4, 0.6])
    a = assignment_avg(j, 1.0, 0.2, 40)
    b = assignment_max(j, 1.0, 0.2, 40)
    assert a.cells == b.cells
    assert np.allclose(a.erase[0], b.erase[0]) and np.allclose(a.erase[1], b.erase[1])


def test_task_moment_examples():
    j = make_joint([[0.5], [0.3], [0.2]])
    single = TaskAssignment(5, ((1,), (2,), (3,)), (((0,), (1,), (2,)),), ((0.0, 0.0, 0.0),))
    assert task_moment(single, j, 1.0).value == pytest.approx(1.0)
    pair = TaskAssignment(5, ((1,), (1,), (2,)), (((0, 1), (2,)),), ((0.0, 0.0),))
    assert task_moment(pair, j, 1.0).value == pytest.approx(1.0 + 0.8)


def test_task_moment_matches_enumeration():
    a = assignment_avg(P3, 1.0, 0.2, 20)
    p = P3.as_array()[:, 0]
    total = 0.0
    for x in range(3):
        cell = a.cell_of(x, 0)
        if cell:
            keep = 1.0 - a.erase[0][a.f[x][0] - 1]
            total += p[x] * keep * len(cell)
    assert task_moment(a, P3, 1.0).value == pytest.approx(total, abs=1e-15)


def test_assignment_rejects_inconsistent_cells():
    with pytest.raises(ValueError):
        TaskAssignment(2, ((1,), (1,)), (((0,), (1,)),), ((0.0, 0.0),))


def test_one_shot_examples():
    rep = one_shot_task_check(P3, 1.0, 0.2, 20)
    assert rep.avg_converse - 1e-9 <= rep.avg_moment <= rep.avg_bound + 1e-9
    rep = one_shot_task_check(bss(0.1), 1.0, 0.2, 64)
    assert rep.max_converse - 1e-9 <= rep.max_moment <= rep.max_bound + 1e-9
    rep = one_shot_task_check(bss(0.1), 1.0, 0.2, 2 ** 20)
    assert rep.avg_bound == pytest.approx(1.0) and rep.max_bound == pytest.approx(1.0)
    assert rep.avg_converse < 0


@given(joints(), st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.05, 0.9), st.sampled_from([1.0, 4.0]))
@settings(max_examples=100, deadline=None)
def test_task_bounds_hold(j, rho, e, factor):
    thr = max(avg_threshold(j, e), max_threshold(j, e))
    M = int(math.floor(thr * factor)) + 1
    rep = one_shot_task_check(j, rho, e, M)
    assert rep.avg_error == pytest.approx(e, abs=1e-12)
    assert rep.max_error == pytest.approx(e, abs=1e-12)


@given(st.floats(1e-6, 1e6), st.floats(0.01, 5.0))
@settings(max_examples=300, deadline=None)
def test_ceiling_inequality(u, rho):
    assert ceiling_bound_holds(u, rho)


def test_report_json_has_unit():
    assert one_shot_task_check(P3, 1.0, 0.2, 20).to_json()["unit"] == "bits"
