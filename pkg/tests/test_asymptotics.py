import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothrenyi import (expansion_smooth_renyi, iid_power, make_dist, residual_sweep, smoothing_set,
                         source_stats)
from smoothrenyi.asymptotics import (clt_mgf_sweep, fit_line, gaussian_cdf, gaussian_quantile, model_sweep,
                                     predict_ff, predict_smooth_renyi)
from smoothrenyi.dist import information_density, value_dist

from conftest import alphas, bern

DENSE = range(20, 401)
B03 = bern(0.3)
Z03 = information_density(B03)


def _bisect_quantile(p):
    lo, hi = -10.0, 10.0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if 0.5 * math.erfc(-mid / math.sqrt(2)) < p else (lo, mid)
    return 0.5 * (lo + hi)


def test_gaussian_quantile_examples():
    assert gaussian_quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    assert gaussian_quantile(0.1) == pytest.approx(-1.2816, abs=5e-5)
    assert gaussian_quantile(0.1) == pytest.approx(_bisect_quantile(0.1), abs=1e-12)


@pytest.mark.parametrize("p", [k / 100 for k in range(1, 100)])
def test_gaussian_quantile_round_trip(p):
    assert gaussian_cdf(gaussian_quantile(p)) == pytest.approx(p, abs=1e-14)


def test_predict_examples():
    u = source_stats(make_dist([0.25] * 4))
    assert predict_smooth_renyi(u, 0.5, 0.1, 37) == pytest.approx(37 * 2.0)
    s = source_stats(B03)
    assert expansion_smooth_renyi(s, 0.5, 0.5).second == pytest.approx(0.0, abs=1e-15)
    want = 100 * s.H + math.sqrt(100 * s.V) * 1.2815515655446004 - math.log2(100)
    assert predict_smooth_renyi(s, 0.5, 0.1, 100) == pytest.approx(want, abs=1e-9)


@given(alphas, st.integers(1, 10_000))
@settings(max_examples=40, deadline=None)
def test_ff_minus_vl_is_log_term(alpha, n):
    s = source_stats(B03)
    diff = predict_ff(s, 0.1, n) - predict_smooth_renyi(s, alpha, 0.1, n)
    assert diff == pytest.approx((1 / (2 * (1 - alpha)) - 0.5) * math.log2(n), abs=1e-9)
    rho = (1 - alpha) / alpha
    assert diff == pytest.approx(math.log2(n) / (2 * rho), abs=1e-9)


def test_predict_ff_examples():
    s = source_stats(B03)
    assert predict_ff(s, 0.5, 64) == pytest.approx(64 * s.H - 3.0)
    assert predict_ff(s, 0.3, 1) == pytest.approx(s.H - math.sqrt(s.V) * gaussian_quantile(0.3))


def test_fit_line_undefined_with_one_point():
    f = fit_line([3.0], [1.0])
    assert math.isnan(f.slope) and math.isnan(f.intercept)
    assert fit_line([1, 2, 3], [2, 4, 6]).slope == pytest.approx(2.0)


def test_uniform_binary_residual_bounded():
    s = residual_sweep(bern(0.5), 0.5, 0.1, range(20, 401, 20))
    assert max(abs(r) for r in s.residuals) <= 2.0


def test_constant_information_density():
    z = value_dist([1.3], [1.0])
    s = clt_mgf_sweep(z, 0.5, 0.2, range(5, 50, 5))
    for n, e in zip(s.n_values, s.exact):
        assert e == pytest.approx(n * 1.3 + math.log2(0.8) / 0.5, abs=1e-9)


def test_constant_density_residual_tracks_third_term():
    # exact minus the two first terms is constant; the expansion's third term is then the whole slope
    z = value_dist([1.3], [1.0])
    s = clt_mgf_sweep(z, 0.5, 0.2, range(5, 50, 5), third_term=False)
    assert np.ptp(s.residuals) < 1e-9


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_two_routes_to_the_sweep_agree(eps):
    # the smooth entropy keeps the residual on one star sequence, the cutoff CGF spreads it over the
    # boundary level; their power sums differ by at most the star sequence's residual^alpha
    alpha = 0.5
    ns = range(20, 201, 30)
    a = residual_sweep(B03, alpha, eps, ns)
    b = clt_mgf_sweep(Z03, 1 - alpha, eps, ns)
    for n, ha, hb in zip(ns, a.exact, b.exact):
        r = smoothing_set(iid_power(B03, n), eps).residual
        sa, sb = 2.0 ** ((1 - alpha) * ha), 2.0 ** ((1 - alpha) * hb)
        assert -1e-9 * sa <= sa - sb <= r ** alpha + 1e-9 * sa


@pytest.mark.xfail(strict=True, reason="pre-asymptotic Gaussian-tail drift at n <= 400; see the ledger")
@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_third_order_log_slope(eps):
    s = residual_sweep(B03, 0.5, eps, DENSE)
    assert abs(s.logn_slope) <= 0.1


@pytest.mark.xfail(strict=True, reason="pre-asymptotic Gaussian-tail drift at n <= 400; see the ledger")
@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_ablated_log_slope(eps):
    s = residual_sweep(B03, 0.5, eps, DENSE, third_term=False)
    assert abs(s.logn_slope + 1.0) <= 0.1


@pytest.mark.xfail(strict=True, reason="pre-asymptotic Gaussian-tail drift at n <= 400; see the ledger")
def test_cutoff_cgf_log_slope():
    assert abs(clt_mgf_sweep(Z03, 0.5, 0.1, DENSE).logn_slope) <= 0.1


@pytest.mark.xfail(strict=True, reason="sqrt(n) fit gives 0.0209, just past the 0.02 band; see the ledger")
def test_median_budget_sqrt_fit():
    s = clt_mgf_sweep(Z03, 0.5, 0.5, DENSE)
    h = len(s.n_values) // 2
    assert abs(fit_line(np.sqrt(s.n_values[h:]), s.residuals[h:]).slope) <= 0.02


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_ablation_shifts_slope_by_third_coefficient(eps):
    # removing the third term moves the slope by exactly -1/(2(1-alpha)) whatever the drift
    full = residual_sweep(B03, 0.5, eps, DENSE)
    ablated = residual_sweep(B03, 0.5, eps, DENSE, third_term=False)
    assert ablated.logn_slope - full.logn_slope == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_gaussian_model_explains_residual(eps):
    # against the Gaussian tilt model the exact values carry no log n drift
    m = model_sweep(B03, 0.5, eps, DENSE)
    assert abs(m.logn_slope) <= 0.05


def test_sweep_csv_header():
    s = residual_sweep(B03, 0.5, 0.1, [20, 40])
    assert s.to_csv().splitlines()[0] == "n,exact_bits,predicted_bits,residual_bits"
