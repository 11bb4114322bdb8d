"""Small numerical helpers working in base 2."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError

LN2 = math.log(2.0)
NEG_INF = float("-inf")


def log2sumexp2(a, b=None) -> float:
    """Return log2(sum(b * 2**a)) without overflow; empty or all -inf gives -inf."""
    a = np.asarray(a, dtype=np.float64).ravel()
    if b is not None:
        b = np.asarray(b, dtype=np.float64).ravel()
        keep = b > 0
        a, b = a[keep], b[keep]
    if a.size == 0 or not np.any(np.isfinite(a)):
        return NEG_INF
    if b is None:
        return float(logsumexp(a * LN2) / LN2)
    return float(logsumexp(a * LN2, b=b) / LN2)


def exp2(x: float) -> float:
    """2**x with 2**(-inf) = 0."""
    if x == NEG_INF:
        return 0.0
    return 2.0 ** x


def log2(x: float) -> float:
    """log2 with log2(0) = -inf."""
    if x <= 0.0:
        return NEG_INF
    return math.log2(x)


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_eps(eps: float, *, allow_zero: bool = True) -> float:
    eps = float(eps)
    lo_ok = eps >= 0.0 if allow_zero else eps > 0.0
    if not (lo_ok and eps < 1.0):
        rng = "[0, 1)" if allow_zero else "(0, 1)"
        raise ParameterError(f"eps must lie in {rng}, got {eps}")
    return eps


def check_rho(rho: float) -> float:
    rho = float(rho)
    if not rho > 0.0:
        raise ParameterError(f"rho must be positive, got {rho}")
    return rho


def alpha_of_rho(rho: float) -> float:
    return 1.0 / (1.0 + check_rho(rho))
