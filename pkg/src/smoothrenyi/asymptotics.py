"""Gaussian quantile, expansion formulas and residual sweeps against exact values."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.special import log_ndtr

from ._numeric import check_alpha, check_eps
from .dist import DEFAULT_TYPE_CAP, Dist, JointDist, ValueDist, iid_power, value_power
from .errors import ParameterError
from .measures import SourceStats, cond_stats, h_alpha_mixture, source_stats
from .smoothing import cutoff_exp_moment, smooth_renyi

SQRT2 = math.sqrt(2.0)


def gaussian_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def gaussian_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def gaussian_quantile(p: float) -> float:
    """Inverse of the standard Gaussian CDF by bisection on an erfc-based CDF."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ParameterError(f"quantile argument must lie in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if gaussian_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return lo if abs(gaussian_cdf(lo) - p) <= abs(gaussian_cdf(hi) - p) else hi


def f_gauss(eps: float) -> float:
    """phi(Phi^{-1}(eps)), extended by 0 at eps = 0 and eps = 1."""
    if eps <= 0.0 or eps >= 1.0:
        return 0.0
    return gaussian_pdf(gaussian_quantile(eps))


@dataclass(frozen=True)
class Expansion:
    """first * n + second * sqrt(n) + third * log2(n)."""

    first: float
    second: float
    third: float
    kind: str

    def predict(self, n):
        n = np.asarray(n, dtype=np.float64)
        out = self.first * n + self.second * np.sqrt(n) + self.third * np.log2(n)
        return float(out) if out.ndim == 0 else out


def expansion_smooth_renyi(stats: SourceStats, alpha: float, eps: float) -> Expansion:
    alpha = check_alpha(alpha)
    eps = check_eps(eps, allow_zero=False)
    if stats.V <= 0.0:
        return Expansion(stats.H, 0.0, 0.0, "zero_variance")
    return Expansion(stats.H, -math.sqrt(stats.V) * gaussian_quantile(eps), -0.5 / (1.0 - alpha), "clt_third_order")


def expansion_ff(stats: SourceStats, eps: float) -> Expansion:
    eps = check_eps(eps, allow_zero=False)
    if stats.V <= 0.0:
        return Expansion(stats.H, 0.0, 0.0, "zero_variance")
    return Expansion(stats.H, -math.sqrt(stats.V) * gaussian_quantile(eps), -0.5, "strassen_ff")


def expansion_avg(j: JointDist) -> Expansion:
    return Expansion(cond_stats(j).H_cond, 0.0, 0.0, "avg_first_order")


def expansion_max(j: JointDist, alpha: float) -> Expansion:
    return Expansion(h_alpha_mixture(j, alpha), 0.0, 0.0, "max_first_order")


def predict_smooth_renyi(stats: SourceStats, alpha: float, eps: float, n):
    return expansion_smooth_renyi(stats, alpha, eps).predict(n)


def predict_ff(stats: SourceStats, eps: float, n):
    return expansion_ff(stats, eps).predict(n)


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float


def fit_line(x: Sequence[float], y: Sequence[float]) -> Fit:
    """Least-squares y ≈ intercept + slope * x; undefined (nan) with fewer than two points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0:
        return Fit(math.nan, math.nan)
    design = np.column_stack([np.ones_like(x), x])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return Fit(float(b), float(a))


@dataclass(frozen=True)
class ResidualSweep:
    n_values: tuple[int, ...]
    exact: tuple[float, ...]
    predicted: tuple[float, ...]
    residuals: tuple[float, ...]
    logn_slope: float
    full_slope: float = math.nan
    intercept: float = math.nan

    def to_csv(self, out: TextIO | None = None) -> str:
        buf = out if out is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "exact_bits", "predicted_bits", "residual_bits"])
        for row in zip(self.n_values, self.exact, self.predicted, self.residuals):
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue() if out is None else ""


def _sweep(n_grid: Iterable[int], exact_fn, predict_fn) -> ResidualSweep:
    ns = tuple(int(n) for n in n_grid)
    exact = tuple(float(exact_fn(n)) for n in ns)
    pred = tuple(float(predict_fn(n)) for n in ns)
    res = tuple(e - p for e, p in zip(exact, pred))
    logn = np.log2(ns)
    half = len(ns) // 2
    tail = fit_line(logn[half:], res[half:])
    full = fit_line(logn, res)
    return ResidualSweep(ns, exact, pred, res, tail.slope, full.slope, tail.intercept)


def residual_sweep(d: Dist, alpha: float, eps: float, n_grid: Iterable[int], third_term: bool = True,
                   cap: int = DEFAULT_TYPE_CAP) -> ResidualSweep:
    """Exact smooth Renyi entropy of d^n against the three-term expansion.

    The log n slope is fitted on the second half of the grid; the
    full-grid slope is kept in ``full_slope``.
    """
    e = expansion_smooth_renyi(source_stats(d), alpha, eps)
    if not third_term:
        e = Expansion(e.first, e.second, 0.0, e.kind)
    return _sweep(n_grid, lambda n: smooth_renyi(iid_power(d, n, cap), alpha, eps), e.predict)


def clt_mgf_sweep(z: ValueDist, s: float, eps: float, n_grid: Iterable[int], third_term: bool = True,
                  cap: int = DEFAULT_TYPE_CAP) -> ResidualSweep:
    """Exact (1/s) log E[<2^{s(Z_1+...+Z_n)}>_eps] against E_n - sqrt(V_n) Phi^{-1}(eps) - log(n)/(2s)."""
    if not s > 0:
        raise ParameterError("s must be positive")
    eps = check_eps(eps, allow_zero=False)
    mean, var = z.mean(), z.variance()
    q = gaussian_quantile(eps)
    third = -0.5 / s if third_term else 0.0

    def predict(n: int) -> float:
        return n * mean - math.sqrt(n * var) * q + third * math.log2(n)

    return _sweep(n_grid, lambda n: cutoff_exp_moment(value_power(z, n, cap), s, eps), predict)


def gaussian_tilt_model(mean: float, var: float, s: float, eps: float, n: int) -> float:
    """(1/s) log2 E[2^{sZ}; Z <= eta] for Z ~ N(n mean, n var) and eta its (1 - eps) quantile.

    This keeps the whole Gaussian tail factor whose leading behaviour is
    the -log(n)/(2s) term, so it tracks the pre-asymptotic drift that the
    three-term expansion leaves in the residual at moderate n.
    """
    eps = check_eps(eps, allow_zero=False)
    if not s > 0 or var <= 0:
        raise ParameterError("need s > 0 and a positive variance")
    t = s * math.log(2.0)
    mu, sd = n * mean, math.sqrt(n * var)
    z = -gaussian_quantile(eps)
    log_e = t * mu + 0.5 * (t * sd) ** 2 + float(log_ndtr(z - t * sd))
    return log_e / math.log(2.0) / s


def model_sweep(d: Dist, alpha: float, eps: float, n_grid: Iterable[int], cap: int = DEFAULT_TYPE_CAP) -> ResidualSweep:
    """Exact smooth Renyi entropy of d^n against the Gaussian tilt model."""
    st = source_stats(d)
    s = 1.0 - check_alpha(alpha)
    return _sweep(n_grid, lambda n: smooth_renyi(iid_power(d, n, cap), alpha, eps),
                  lambda n: gaussian_tilt_model(st.H, st.V, s, eps, n))
