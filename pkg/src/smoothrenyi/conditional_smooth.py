"""Conditional smooth Renyi entropies: per-y budgets, the constant-budget form,
the optimized-budget form and the guessing-cutoff form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._numeric import NEG_INF, check_alpha, check_eps, log2sumexp2
from ._rows import Row, rows_of
from .dist import JointDist, TypeFamily
from .errors import ParameterError, PreconditionError, ResourceCapError
from .measures import alpha_expectation, arimoto_conditional
from .smoothing import HEAD_TOL, _log2_power_sum, ball_grid_minimum, smooth_renyi

PROFILE_TOL = 1e-12
GAP_TOL = 1e-12
BREAK_SNAP = 1e-14
MAX_VERTEX_COMBOS = 2_000_000


@dataclass(frozen=True)
class DeltaProfile:
    """Per-y smoothing budgets and their P_Y-average."""

    delta: tuple[float, ...]
    mean: float

    def __post_init__(self):
        for y, d in enumerate(self.delta):
            if not 0.0 <= d <= 1.0:
                raise ParameterError(f"delta({y}) = {d} outside [0, 1]")

    def check(self, j: JointDist) -> None:
        m = _profile_mean(j, self.delta)
        if abs(m - self.mean) > PROFILE_TOL:
            raise ParameterError(f"profile mean {self.mean} does not match recomputed {m}")


def _profile_mean(j: JointDist, deltas: Sequence[float]) -> float:
    py = j.y_marginal.probs
    if len(deltas) != len(py):
        raise ParameterError(f"profile has {len(deltas)} entries, expected {len(py)}")
    return math.fsum(w * d for w, d in zip(py, deltas))


def delta_profile(j: JointDist, deltas: Sequence[float]) -> DeltaProfile:
    deltas = tuple(float(d) for d in deltas)
    return DeltaProfile(deltas, _profile_mean(j, deltas))


def constant_profile(j: JointDist, eps: float) -> DeltaProfile:
    return delta_profile(j, [eps] * j.shape[1])


@dataclass(frozen=True)
class CondSmoothReport:
    value: float
    profile: DeltaProfile
    method: str
    duality_gap: float = 0.0


def _row_log2_power(row: Row, alpha: float, delta: float) -> float:
    """log2 of (sum_head p^alpha + residual^alpha)^{1/alpha} for one conditional row; -inf if delta >= 1."""
    if delta >= 1.0:
        return NEG_INF
    return _log2_power_sum(row.log2_prob, row.log2_count, max(delta, 0.0), alpha) / alpha


def bar_h(j: JointDist, alpha: float, delta: DeltaProfile | Sequence[float]) -> float:
    """alpha-expectation of the per-y smooth Renyi entropies at budgets delta(y)."""
    alpha = check_alpha(alpha)
    deltas = delta.delta if isinstance(delta, DeltaProfile) else tuple(float(d) for d in delta)
    if len(deltas) != j.shape[1]:
        raise ParameterError(f"profile has {len(deltas)} entries, expected {j.shape[1]}")
    per_y = [NEG_INF if d >= 1.0 else smooth_renyi(j.row(y), alpha, d) for y, d in enumerate(deltas)]
    return alpha_expectation(per_y, j.y_marginal, alpha)


def check_h(j: JointDist | TypeFamily, alpha: float, eps: float) -> float:
    """Constant-budget conditional smooth entropy; type families are aggregated per y-type."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps)
    if isinstance(j, JointDist):
        return bar_h(j, alpha, [eps] * j.shape[1])
    terms = [r.log2_weight + _row_log2_power(r, alpha, eps) for r in rows_of(j)]
    return alpha / (1.0 - alpha) * log2sumexp2(terms)


def check_h_direct(j: JointDist, alpha: float, eps: float) -> float:
    """Explicit head-set sum over joint probabilities, written independently of bar_h."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps)
    a = j.as_array()
    total = 0.0
    for y in range(a.shape[1]):
        col = a[:, y]
        py = float(col.sum())
        cond = sorted((v / py for v in col if v > 0), reverse=True)
        acc, head = 0.0, 0.0
        for i, v in enumerate(cond):
            tail = math.fsum(cond[i + 1:])
            if tail <= eps + HEAD_TOL:
                residual = min(max(1.0 - eps - acc, 0.0), v)
                head += residual ** alpha
                break
            head += v ** alpha
            acc += v
        total += py * head ** (1.0 / alpha)
    return alpha / (1.0 - alpha) * math.log2(total)


# ---------------------------------------------------------------------------
# optimized per-y budgets


@dataclass(frozen=True)
class _Curve:
    """F(d) = (sum_head p^alpha + residual^alpha)^{1/alpha} for one y, with its breakpoints."""

    weight: float
    cum: np.ndarray  # C_0 = 0, C_1, ..., C_m
    pow_cum: np.ndarray  # S_k = sum_{i<=k} p_i^alpha
    alpha: float

    @property
    def breaks(self) -> np.ndarray:
        """Budgets d = 1 - C_k in ascending order, d = 0 exactly at the full row."""
        d = 1.0 - self.cum[::-1]
        d[0] = 0.0
        return d

    @property
    def break_values(self) -> np.ndarray:
        return self.pow_cum[::-1] ** (1.0 / self.alpha)

    def value(self, d: np.ndarray | float) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        keep = np.clip(1.0 - d, 0.0, 1.0)
        m = self.cum.size - 1
        k = np.clip(np.searchsorted(self.cum, keep, side="right") - 1, 0, m)
        residual = keep - self.cum[k]
        # 1 - (1 - C_k) is not C_k in floating point, and residual^alpha has
        # unbounded slope at 0, so roundoff-sized residuals are snapped to 0
        residual = np.where(residual <= BREAK_SNAP, 0.0, residual)
        s = self.pow_cum[k] + residual ** self.alpha
        return np.where(d >= 1.0, 0.0, s ** (1.0 / self.alpha))


def _curves(j: JointDist, alpha: float) -> list[_Curve]:
    out = []
    for r in rows_of(j):
        p = np.exp2(r.log2_prob)
        cum = np.concatenate(([0.0], np.cumsum(p)))
        cum[-1] = 1.0
        pow_cum = np.concatenate(([0.0], np.cumsum(p ** alpha)))
        out.append(_Curve(r.weight, cum, pow_cum, alpha))
    return out


def _lower_hull(x: np.ndarray, f: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (f[b] - f[a]) * (x[i] - x[a]) >= (f[i] - f[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _parametric_sweep(curves: list[_Curve], eps: float) -> tuple[np.ndarray, float]:
    """Minimize sum_y w_y conv(F_y)(d_y) subject to sum_y w_y d_y = eps.

    Every multiplier value selects a prefix of hull segments in order of
    slope, so the sweep over all multipliers is the sorted segment list.
    Returns the budgets and the lower bound.
    """
    segments = []
    for y, c in enumerate(curves):
        x, f = c.breaks, c.break_values
        h = _lower_hull(x, f)
        for a, b in zip(h, h[1:]):
            segments.append(((f[b] - f[a]) / (x[b] - x[a]), y, x[a], x[b], f[a]))
    segments.sort(key=lambda s: (s[0], s[1], s[2]))
    d = np.zeros(len(curves))
    lower = np.array([c.break_values[0] for c in curves])
    budget = eps
    for slope, y, x0, x1, f0 in segments:
        w = curves[y].weight
        span = w * (x1 - x0)
        if span <= budget:
            d[y] = x1
            lower[y] = f0 + slope * (x1 - x0)
            budget -= span
        else:
            step = budget / w
            d[y] = x0 + step
            lower[y] = f0 + slope * step
            budget = 0.0
        if budget <= 0.0:
            break
    weights = np.array([c.weight for c in curves])
    return np.clip(d, 0.0, 1.0), float(np.sum(weights * lower))


def _vertex_search(curves: list[_Curve], eps: float) -> tuple[float, np.ndarray] | None:
    """Exact minimum: all but one y sit at a breakpoint, the remaining y absorbs the budget.

    Between breakpoints each F_y is concave, so the minimum over the
    constraint polytope is attained at such a vertex.
    """
    sizes = [c.cum.size for c in curves]
    combos = sum(math.prod(s for k, s in enumerate(sizes) if k != y0) for y0 in range(len(curves)))
    if combos > MAX_VERTEX_COMBOS:
        return None
    best, best_d = math.inf, None
    for y0, free in enumerate(curves):
        others = [k for k in range(len(curves)) if k != y0]
        used = np.zeros(1)
        cost = np.zeros(1)
        picks = np.zeros((1, 0))
        for k in others:
            c = curves[k]
            u = (used[:, None] + c.weight * c.breaks[None, :]).ravel()
            v = (cost[:, None] + c.weight * c.break_values[None, :]).ravel()
            pk = np.column_stack([np.repeat(picks, c.breaks.size, axis=0), np.tile(c.breaks, used.size)])
            ok = u <= eps + 1e-15
            used, cost, picks = u[ok], v[ok], pk[ok]
        d0 = (eps - used) / free.weight
        ok = (d0 >= -1e-15) & (d0 <= 1.0)
        if not np.any(ok):
            continue
        d0 = np.clip(d0[ok], 0.0, 1.0)
        total = cost[ok] + free.weight * free.value(d0)
        i = int(np.argmin(total))
        if total[i] < best:
            best = float(total[i])
            prof = np.empty(len(curves))
            prof[others] = picks[ok][i]
            prof[y0] = d0[i]
            best_d = prof
    return (best, best_d) if best_d is not None else None


def _to_bits(alpha: float, g: float) -> float:
    return NEG_INF if g <= 0.0 else alpha / (1.0 - alpha) * math.log2(g)


def kuzuoka_h(j: JointDist, alpha: float, eps: float) -> CondSmoothReport:
    """Smooth conditional Renyi entropy: minimum of bar_h over profiles with mean eps."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps, allow_zero=False)
    if j.shape[1] == 1:
        prof = constant_profile(j, eps)
        return CondSmoothReport(smooth_renyi(j.row(0), alpha, eps), prof, "closed_form")
    curves = _curves(j, alpha)
    weights = np.array([c.weight for c in curves])
    d, lower = _parametric_sweep(curves, eps)
    upper = float(np.sum(weights * np.array([float(c.value(v)) for c, v in zip(curves, d)])))
    method = "lagrangian"
    if upper - lower > GAP_TOL * max(upper, 1e-300):
        found = _vertex_search(curves, eps)
        if found is not None and found[0] < upper:
            upper, d = found
        elif found is None and j.shape[1] <= 4:
            g, dd = _dp_grid(j, alpha, eps, 0.005)
            if g < upper:
                upper, d, method = g, np.asarray(dd), "dp_grid"
    prof = delta_profile(j, [float(v) for v in d])
    value = _to_bits(alpha, upper)
    gap = value - _to_bits(alpha, lower) if lower > 0 else math.inf
    return CondSmoothReport(value, prof, method, max(gap, 0.0))


def _dp_grid(j: JointDist, alpha: float, eps: float, step: float) -> tuple[float, tuple[float, ...]]:
    if j.shape[1] > 4:
        raise PreconditionError(f"dp grid supports at most 4 y values, got {j.shape[1]}")
    if not 0 < step <= 0.01:
        raise ParameterError("step must lie in (0, 0.01]")
    curves = _curves(j, alpha)
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    res = step * min(c.weight for c in curves)
    states: dict[int, tuple[float, float, tuple[float, ...]]] = {0: (0.0, 0.0, ())}
    for k, c in enumerate(curves):
        # breakpoints join the grid: F has infinite slope just below each of them
        base = np.unique(np.concatenate((grid, c.breaks)))
        last = k == len(curves) - 1
        vals_base = c.weight * c.value(base)
        nxt: dict[int, tuple[float, float, tuple[float, ...]]] = {}
        for g, m, ds in states.values():
            pts, vals = base, vals_base
            if last:
                # the last row may take exactly the budget left over
                rest = min(max((eps - m) / c.weight, 0.0), 1.0)
                pts = np.append(base, rest)
                vals = np.append(vals_base, c.weight * c.value(np.array([rest])))
            means = m + c.weight * pts
            # only budget-feasible profiles: the smooth entropy is non-increasing in delta, so the
            # grid minimum stays an upper bound on the true minimum
            for i in np.nonzero(means <= eps + 1e-12)[0]:
                key = int(means[i] / res)
                cand = g + vals[i]
                if key not in nxt or cand < nxt[key][0]:
                    nxt[key] = (cand, float(means[i]), ds + (float(pts[i]),))
        states = nxt
    g, _, ds = min(states.values(), key=lambda s: s[0])
    return g, ds


def kuzuoka_h_dp_grid(j: JointDist, alpha: float, eps: float, step: float = 0.005) -> float:
    """Grid oracle: per-y budgets on a step grid plus the row breakpoints, mean at most eps."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps, allow_zero=False)
    g, _ = _dp_grid(j, alpha, eps, step)
    return _to_bits(alpha, g)


def kuzuoka_h_joint_grid(j: JointDist, alpha: float, eps: float, step: float = 0.005) -> float:
    """Grid search of (alpha/(1-alpha)) log sum_y (sum_x Q^alpha)^{1/alpha} over the joint eps-ball."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps)
    a = j.as_array()
    if a.size > 6:
        raise ResourceCapError(f"joint grid supports at most 6 cells, got {a.size}")
    if eps == 0.0:
        return arimoto_conditional(j, alpha)
    xs, ys = np.nonzero(a > 0)
    p = a[xs, ys]
    cols = [np.nonzero(ys == y)[0] for y in range(a.shape[1])]

    def objective(q: np.ndarray) -> np.ndarray:
        qa = q ** alpha
        tot = sum(np.sum(qa[:, c], axis=1) ** (1.0 / alpha) for c in cols)
        with np.errstate(divide="ignore"):
            return alpha / (1.0 - alpha) * np.log2(tot)

    return ball_grid_minimum(p, eps, step, objective)


# ---------------------------------------------------------------------------
# guessing cutoffs and the tilde form


@dataclass(frozen=True)
class GuessCutoffs:
    """J, xi and upsilon of the average-criterion guessing cutoff.

    ``next_mass`` is sum_y P(rank J+1 of y, y).
    """

    J: int
    xi: float
    upsilon: float
    next_mass: float


def _cum_table(row: Row) -> tuple[np.ndarray, np.ndarray]:
    cc = np.concatenate(([0.0], np.cumsum(row.counts())))
    cm = np.concatenate(([0.0], np.cumsum(row.masses())))
    return cc, cm


def _level_of_rank(cc: np.ndarray, k: float) -> int:
    """Index of the level holding rank k (1-based), or -1 beyond the support."""
    idx = int(np.searchsorted(cc, k - 0.5, side="left")) - 1
    return idx if idx < cc.size - 1 else -1


def cutoffs_of_rows(rows: Sequence[Row], eps: float) -> GuessCutoffs:
    target = 1.0 - eps - HEAD_TOL
    tables = [_cum_table(r) for r in rows]
    weights = np.array([r.weight for r in rows])
    bps = np.unique(np.concatenate([cc for cc, _ in tables]))

    def c_at(x: np.ndarray | float) -> np.ndarray:
        return sum(w * np.interp(x, cc, cm) for w, (cc, cm) in zip(weights, tables))

    cb = np.asarray(c_at(bps))
    i = int(np.nonzero(cb < target)[0][-1])
    if i == bps.size - 1:
        J = int(bps[i])
    else:
        rate = (cb[i + 1] - cb[i]) / (bps[i + 1] - bps[i])
        J = int(bps[i]) + max(math.ceil((target - cb[i]) / rate) - 1, 0)
        J = min(J, int(bps[i + 1]) - 1)
    c_j = float(c_at(float(J)))
    next_mass = 0.0
    for r, (cc, _) in zip(rows, tables):
        lvl = _level_of_rank(cc, J + 1)
        if lvl >= 0:
            next_mass += r.weight * 2.0 ** float(r.log2_prob[lvl])
    xi = max(1.0 - eps - c_j, 0.0)
    upsilon = min(xi / next_mass, 1.0) if next_mass > 0 else 0.0
    return GuessCutoffs(J, xi, upsilon, next_mass)


def guess_cutoffs(j: JointDist | TypeFamily, eps: float) -> GuessCutoffs:
    eps = check_eps(eps, allow_zero=False)
    return cutoffs_of_rows(rows_of(j), eps)


def _prefix_log2_power(row: Row, count: float, alpha: float) -> float:
    """log2 of sum over the first ``count`` ranks of p^alpha."""
    cc, _ = _cum_table(row)
    terms = []
    for lvl in range(row.log2_prob.size):
        if cc[lvl] >= count:
            break
        take = min(cc[lvl + 1], count) - cc[lvl]
        terms.append(math.log2(take) + alpha * float(row.log2_prob[lvl]))
    return log2sumexp2(terms)


def tilde_h(j: JointDist | TypeFamily, alpha: float, eps: float) -> float:
    """(alpha/(1-alpha)) log sum_y (sum_{k<=J} P(k-th, y)^alpha + upsilon^alpha P((J+1)-th, y)^alpha)^{1/alpha}."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps, allow_zero=False)
    rows = rows_of(j)
    cut = cutoffs_of_rows(rows, eps)
    terms = []
    for r in rows:
        parts = [_prefix_log2_power(r, cut.J, alpha)]
        lvl = _level_of_rank(_cum_table(r)[0], cut.J + 1)
        if lvl >= 0 and cut.upsilon > 0:
            parts.append(alpha * (math.log2(cut.upsilon) + float(r.log2_prob[lvl])))
        inner = log2sumexp2(parts)
        if inner > NEG_INF:
            terms.append(r.log2_weight + inner / alpha)
    return alpha / (1.0 - alpha) * log2sumexp2(terms)


def smooth_conditional(j: JointDist, alpha: float, eps: float) -> float:
    """Value of kuzuoka_h, extended to eps = 0 by Arimoto's conditional entropy."""
    if eps == 0.0:
        return arimoto_conditional(j, alpha)
    return kuzuoka_h(j, alpha, eps).value
