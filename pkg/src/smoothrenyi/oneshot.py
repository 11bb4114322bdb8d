"""Cost profiles (kappa, err), their stochastic cost moments, and the unified one-shot bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._numeric import NEG_INF, check_alpha, check_eps, check_rho
from .conditional_smooth import DeltaProfile, bar_h, check_h, smooth_conditional
from .dist import JointDist
from .errors import BoundViolation, ParameterError, PreconditionError
from .smoothing import _scan, tilted_conditional

BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class CostProfile:
    """kappa[x][y] > 0 and erasure probabilities err[x][y], indexed like JointDist.probs."""

    kappa: tuple[tuple[float, ...], ...]
    err: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=np.float64)
        e = np.asarray(self.err, dtype=np.float64)
        if k.shape != e.shape or k.ndim != 2:
            raise ParameterError("kappa and err must be matrices of the same shape")
        if np.any(~(k > 0)):
            raise ParameterError("kappa entries must be positive")
        if np.any((e < 0) | (e > 1)):
            raise ParameterError("err entries must lie in [0, 1]")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.kappa, dtype=np.float64), np.asarray(self.err, dtype=np.float64)


def cost_profile(kappa, err) -> CostProfile:
    to_t = lambda m: tuple(tuple(float(v) for v in row) for row in np.asarray(m, dtype=np.float64))
    return CostProfile(to_t(kappa), to_t(err))


@dataclass(frozen=True)
class RhoMoment:
    """E[K^rho] and (1/rho) log2 E[K^rho]."""

    value: float
    log_scaled: float

    @classmethod
    def of(cls, value: float, rho: float) -> "RhoMoment":
        value = float(value)
        return cls(value, NEG_INF if value <= 0 else math.log2(value) / rho)


@dataclass(frozen=True)
class BoundReport:
    bound: float
    moment_bits: float
    verdict: str  # holds | inapplicable


def k_moment(j: JointDist, c: CostProfile, rho: float) -> RhoMoment:
    """E[K^rho] = sum P(x,y) (1 - err) kappa^rho, exact over the erasure coin."""
    rho = check_rho(rho)
    k, e = c.arrays()
    p = j.as_array()
    if k.shape != p.shape:
        raise ParameterError(f"profile shape {k.shape} does not match joint shape {p.shape}")
    return RhoMoment.of(float(np.sum(p * (1.0 - e) * k ** rho)), rho)


def redundancy(c: CostProfile, y_alphabet: Sequence[int] | None = None) -> float:
    """sup_y of sum over x with err < 1 of 1/kappa."""
    k, e = c.arrays()
    ys = range(k.shape[1]) if y_alphabet is None else y_alphabet
    return max(float(np.sum(np.where(e[:, y] < 1.0, 1.0 / k[:, y], 0.0))) for y in ys)


def _converse(j, c, rho, eps, entropy, error, label) -> BoundReport:
    rho = check_rho(rho)
    eps = check_eps(eps)
    moment = k_moment(j, c, rho).log_scaled
    if error > eps + 1e-12:
        return BoundReport(math.nan, moment, "inapplicable")
    r = redundancy(c)
    bound = entropy - math.log2(r) if r > 0 else math.inf
    if moment < bound - BOUND_SLACK:
        raise BoundViolation(f"{label}: moment {moment} below bound {bound} (entropy {entropy}, R {r}, error {error})")
    return BoundReport(bound, moment, "holds")


def converse_avg_bound(j: JointDist, c: CostProfile, rho: float, eps: float) -> BoundReport:
    """H_alpha^eps(X|Y) - log R with alpha = 1/(1+rho); checks the moment against it."""
    _, e = c.arrays()
    error = float(np.sum(j.as_array() * e))
    alpha = 1.0 / (1.0 + check_rho(rho))
    entropy = smooth_conditional(j, alpha, check_eps(eps)) if error <= eps + 1e-12 else math.nan
    return _converse(j, c, rho, eps, entropy, error, "average-error converse")


def converse_max_bound(j: JointDist, c: CostProfile, rho: float, eps: float) -> BoundReport:
    """Constant-budget analogue under the per-y error constraint."""
    _, e = c.arrays()
    a = j.as_array()
    error = float(np.max(np.sum(a * e, axis=0) / a.sum(axis=0)))
    alpha = 1.0 / (1.0 + check_rho(rho))
    entropy = check_h(j, alpha, check_eps(eps)) if error <= eps + 1e-12 else math.nan
    return _converse(j, c, rho, eps, entropy, error, "maximum-error converse")


def threshold_profile(j: JointDist, alpha: float, kappa, delta: DeltaProfile | Sequence[float],
                      c_bound: float) -> CostProfile:
    """Erasure rule meeting per-y budgets delta(y) exactly, erasing the largest kappa first.

    The boundary kappa value is erased with a common probability, so
    E[err | Y=y] = delta(y). The moment bound bar_h + log c is checked.
    """
    alpha = check_alpha(alpha)
    rho = (1.0 - alpha) / alpha
    deltas = delta.delta if isinstance(delta, DeltaProfile) else tuple(float(d) for d in delta)
    k = np.asarray(kappa, dtype=np.float64)
    a = j.as_array()
    if k.shape != a.shape:
        raise ParameterError(f"kappa shape {k.shape} does not match joint shape {a.shape}")
    tilted = tilted_conditional(j.conditional(), alpha, deltas)
    for y, q in enumerate(tilted.rows):
        if q is None:
            continue
        for x, qx in enumerate(q):
            if k[x, y] * qx > c_bound * (1.0 + 1e-12):
                raise PreconditionError(f"kappa * Q = {k[x, y] * qx} exceeds c = {c_bound} at (x={x}, y={y})")
    err = np.ones_like(a)
    for y in range(a.shape[1]):
        col = a[:, y] / a[:, y].sum()
        live = np.nonzero(col > 0)[0]
        values, inv = np.unique(k[live, y], return_inverse=True)
        masses = np.bincount(inv, weights=col[live])
        i, beta = _scan(values, masses, deltas[y])
        if deltas[y] >= 1.0:
            i, beta = 0, 1.0
        if deltas[y] <= 0.0:
            i, beta = values.size - 1, 0.0
        err[live, y] = np.where(inv > i, 1.0, np.where(inv == i, beta, 0.0))
    prof = CostProfile(tuple(map(tuple, k.tolist())), tuple(map(tuple, err.tolist())))
    moment = k_moment(j, prof, rho).log_scaled
    bound = bar_h(j, alpha, deltas) + math.log2(c_bound)
    if moment > bound + BOUND_SLACK:
        raise BoundViolation(f"threshold profile moment {moment} exceeds bar_h + log c = {bound}")
    return prof
