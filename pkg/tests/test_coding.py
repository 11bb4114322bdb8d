import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothrenyi import (bes, code_report, constant_profile, ff_limit, iid_power, make_dist,
                         make_joint, one_shot_campbell_check, renyi_entropy, smooth_renyi, smoothed_shannon_code,
                         source_stats)
from smoothrenyi.asymptotics import expansion_ff, fit_line
from smoothrenyi.coding import (Code, Emission, canonical_code, is_prefix_free, kraft_sum, shannon_cutoff_cgf,
                                shannon_lengths, weak_limit_bruteforce)

from conftest import bern, dists, epsilons, joints

P3 = make_joint([[0.5], [0.3], [0.2]])


def _lengths(code, y=0):
    return {x: len(em.words[0][0]) for x, em in enumerate(row[y] for row in code.emissions)}


def test_smoothed_shannon_example():
    code = smoothed_shannon_code(P3, 1.0, [0.2])
    book = dict(code.books[0])
    assert sorted(len(w) for w in book) == [1, 2]
    assert book[code.emissions[0][0].words[0][0]] == 0 and book[code.emissions[1][0].words[0][0]] == 1
    assert len(code.emissions[0][0].words[0][0]) == 1 and len(code.emissions[1][0].words[0][0]) == 2
    assert code_report(code, P3, 1.0).error_avg == pytest.approx(0.2, abs=1e-12)


def test_uniform_two_zero_budget():
    j = make_joint([[0.5], [0.5]])
    code = smoothed_shannon_code(j, 1.0, [0.0])
    assert _lengths(code) == {0: 1, 1: 1}
    assert code_report(code, j, 1.0).error_avg == 0.0


@given(joints(), st.floats(0.1, 3.0), epsilons)
@settings(max_examples=50, deadline=None)
def test_books_prefix_free_and_kraft(j, rho, e):
    code = smoothed_shannon_code(j, rho, constant_profile(j, e))
    for book in code.books:
        words = [w for w, _ in book]
        assert is_prefix_free(words) and kraft_sum(words) <= 1.0
    rep = code_report(code, j, rho)
    assert rep.error_max <= e + 1e-12
    if rep.error_avg < 1:
        assert rep.cutoff_cgf <= rep.cgf + 1e-12


def test_fixed_length_code_cgf_is_length():
    j = make_joint([[0.1], [0.2], [0.3], [0.4]])
    words = ["00", "01", "10", "11"]
    code = Code(tuple((Emission(((w, 1.0),)),) for w in words), (tuple((w, x) for x, w in enumerate(words)),))
    for rho in (0.3, 1.0, 2.5):
        rep = code_report(code, j, rho)
        assert rep.cgf == pytest.approx(2.0) and rep.cutoff_cgf == pytest.approx(2.0) and rep.error_avg == 0.0


def test_empty_string_code():
    j = make_joint([[0.6], [0.3], [0.1]])
    code = Code(tuple((Emission((("", 1.0),)),) for _ in range(3)), ((("", 0),),))
    rep = code_report(code, j, 1.0)
    assert rep.cgf == pytest.approx(0.0, abs=1e-12) and rep.error_avg == pytest.approx(1 - 0.6)


def test_lemma7_example():
    code = smoothed_shannon_code(P3, 1.0, [0.2])
    rep = code_report(code, P3, 1.0)
    assert rep.cutoff_cgf < smooth_renyi(make_dist([0.5, 0.3, 0.2]), 0.5, 0.2) + 1


def test_campbell_examples():
    avg, mx = one_shot_campbell_check(P3, 1.0, 0.2)
    assert avg.cutoff_cgf < avg.upper_cutoff and avg.error <= 0.2 + 1e-12
    for rep in one_shot_campbell_check(bes(0.2), 0.5, 0.1):
        assert rep.lower - 1e-9 <= rep.cutoff_cgf < rep.upper_cutoff
    avg, _ = one_shot_campbell_check(P3, 1.0, 0.0)
    h = renyi_entropy(make_dist([0.5, 0.3, 0.2]), 0.5)
    assert avg.lower == pytest.approx(h) and avg.upper_cutoff == pytest.approx(h + 1)
    assert h <= avg.cgf < h + 1


@given(joints(), st.floats(0.2, 3.0), epsilons)
@settings(max_examples=50, deadline=None)
def test_campbell_property(j, rho, e):
    one_shot_campbell_check(j, rho, e)


def test_weak_limit_examples():
    assert weak_limit_bruteforce(make_dist([0.5, 0.5]), 1.0, 0.0) == pytest.approx(1.0)
    d = make_dist([0.5, 0.3, 0.2])
    h = smooth_renyi(d, 0.5, 0.2)
    w = weak_limit_bruteforce(d, 1.0, 0.2)
    assert h - 1e-9 <= w < h + 1 + 1e-9


@given(dists(max_size=3), st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.0, 0.6))
@settings(max_examples=30, deadline=None)
def test_weak_limit_sandwich(d, rho, e):
    h = smooth_renyi(d, 1 / (1 + rho), e)
    w = weak_limit_bruteforce(d, rho, e)
    assert h - 1e-9 <= w <= h + 1 + 1e-9


@given(dists(), st.sampled_from([0.5, 1.0, 2.0]), epsilons)
@settings(max_examples=40, deadline=None)
def test_level_cutoff_cgf_matches_explicit_code(d, rho, e):
    j = make_joint([[v] for v in d.probs])
    rep = code_report(smoothed_shannon_code(j, rho, [e]), j, rho)
    assert shannon_cutoff_cgf(d, rho, e) == pytest.approx(rep.cutoff_cgf, abs=1e-9)


def test_ff_limit_examples():
    # the head set at eps = 0 holds three of the four symbols, so two bits suffice
    assert ff_limit(make_dist([0.25] * 4), 0.0) == 2
    assert ff_limit(make_dist([0.5, 0.5]), 0.6) == 0


def test_ff_limit_strassen_sweep():
    ns = list(range(20, 401, 20))
    exp = expansion_ff(source_stats(bern(0.3)), 0.1)
    res = [ff_limit(iid_power(bern(0.3), n), 0.1) - exp.predict(n) for n in ns]
    h = len(ns) // 2
    assert abs(fit_line(np.log2(ns[h:]), res[h:]).slope) <= 0.15


def test_shannon_lengths_and_canonical():
    lengths = shannon_lengths([0.5, 0.25, 0.125, 0.125])
    assert lengths == {0: 1, 1: 2, 2: 3, 3: 3}
    words = canonical_code(lengths)
    assert words == {0: "0", 1: "10", 2: "110", 3: "111"}
    with pytest.raises(ValueError):
        canonical_code({0: 1, 1: 1, 2: 1})


def test_code_json_schema():
    recs = smoothed_shannon_code(P3, 1.0, [0.2]).to_json()
    assert {r["symbol"] for r in recs} == {0, 1, 2}
    assert all(set(r) == {"symbol", "y", "codewords", "erase_prob"} for r in recs)
