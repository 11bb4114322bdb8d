"""Non-smooth information measures in bits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._numeric import NEG_INF, check_alpha, log2sumexp2
from .dist import Dist, JointDist, LevelDist


@dataclass(frozen=True)
class SourceStats:
    H: float
    V: float
    T: float
    H_inf: float


@dataclass(frozen=True)
class CondStats:
    H_cond: float
    U: float
    V_cond: float
    per_y_H: tuple[float, ...]
    per_y_V: tuple[float, ...]


def _levels(d: Dist | LevelDist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(d, LevelDist):
        return d.log2_prob, d.log2_count
    p = d.as_array()
    p = p[p > 0]
    return np.log2(p), np.zeros_like(p)


def source_stats(d: Dist | LevelDist) -> SourceStats:
    lp, lc = _levels(d)
    w = np.exp2(lp + lc)
    info = -lp
    H = float(np.sum(w * info))
    dev = info - H
    V = float(np.sum(w * dev * dev))
    T = float(np.sum(w * np.abs(dev) ** 3))
    return SourceStats(H, max(V, 0.0), T, float(-np.max(lp)))


def shannon_entropy(d: Dist | LevelDist) -> float:
    return source_stats(d).H


def renyi_entropy(d: Dist | LevelDist, alpha: float) -> float:
    """H_alpha = log(sum p^alpha) / (1 - alpha)."""
    alpha = check_alpha(alpha)
    lp, lc = _levels(d)
    return log2sumexp2(lc + alpha * lp) / (1.0 - alpha)


def alpha_expectation(values: Sequence[float] | Mapping[int, float], weights: Dist | Sequence[float], alpha: float) -> float:
    """(alpha/(1-alpha)) log sum_y P(y) 2^{((1-alpha)/alpha) value(y)}; -inf values contribute 0."""
    alpha = check_alpha(alpha)
    w = np.asarray(weights.probs if isinstance(weights, Dist) else weights, dtype=np.float64)
    if isinstance(values, Mapping):
        v = np.array([values[y] for y in range(w.size)], dtype=np.float64)
    else:
        v = np.asarray(values, dtype=np.float64)
    if v.shape != w.shape:
        raise ValueError("values and weights differ in length")
    c = (1.0 - alpha) / alpha
    live = (w > 0) & (v > NEG_INF)
    if not np.any(live):
        return NEG_INF
    return log2sumexp2(c * v[live] + np.log2(w[live])) / c


def _columns(j: JointDist) -> tuple[np.ndarray, np.ndarray]:
    a = j.as_array()
    return a, a.sum(axis=0)


def arimoto_conditional(j: JointDist, alpha: float) -> float:
    """Arimoto's conditional Renyi entropy, as the alpha-expectation of per-y Renyi entropies."""
    alpha = check_alpha(alpha)
    per_y = [renyi_entropy(j.row(y), alpha) for y in range(j.shape[1])]
    return alpha_expectation(per_y, j.y_marginal, alpha)


def arimoto_direct(j: JointDist, alpha: float) -> float:
    """(alpha/(1-alpha)) log sum_y (sum_x P(x,y)^alpha)^{1/alpha}."""
    alpha = check_alpha(alpha)
    a, _ = _columns(j)
    inner = [log2sumexp2(alpha * np.log2(col[col > 0])) / alpha for col in a.T]
    return alpha / (1.0 - alpha) * log2sumexp2(inner)


def h_alpha_mixture(j: JointDist, alpha: float) -> float:
    """alpha-expectation of the per-y Shannon entropies."""
    alpha = check_alpha(alpha)
    per_y = [shannon_entropy(j.row(y)) for y in range(j.shape[1])]
    return alpha_expectation(per_y, j.y_marginal, alpha)


def conditional_entropy(j: JointDist) -> float:
    return cond_stats(j).H_cond


def cond_stats(j: JointDist) -> CondStats:
    a, py = _columns(j)
    per_H, per_V = [], []
    for y in range(a.shape[1]):
        s = source_stats(j.row(y))
        per_H.append(s.H)
        per_V.append(s.V)
    H = math.fsum(float(py[y]) * per_H[y] for y in range(py.size))
    mask = a > 0
    cond = np.where(mask, a / py[None, :], 1.0)
    info = -np.log2(cond)
    U = float(np.sum(np.where(mask, a * (info - H) ** 2, 0.0)))
    V = math.fsum(float(py[y]) * per_V[y] for y in range(py.size))
    return CondStats(H, U, V, tuple(per_H), tuple(per_V))
