"""Smoothing operator: head sets, the closed-form smooth Renyi entropy,
the epsilon-cutoff transform and the tilted conditional distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from ._numeric import NEG_INF, check_alpha, check_eps, log2sumexp2
from .dist import CondDist, Dist, LevelDist, ValueDist, decreasing_rearrangement, information_density
from .errors import ParameterError, ResourceCapError

# Cumulative masses within this distance below 1 - eps count as reaching it.
HEAD_TOL = 1e-12
CUTOFF_TOL = 1e-13


@dataclass(frozen=True)
class SmoothingResult:
    head_mass: float
    head_count: int
    residual: float
    star_prob: float
    entropy: float | None = None
    head: tuple[int, ...] | None = None
    star: int | None = None


@dataclass(frozen=True)
class CutoffParams:
    eta: float
    beta: float


@dataclass(frozen=True)
class TiltedCond:
    """Per-y tilted rows; a row is None when delta(y) = 1 removes everything."""

    rows: tuple[tuple[float, ...] | None, ...]
    heads: tuple[tuple[int, ...], ...]
    stars: tuple[int | None, ...]
    residuals: tuple[float, ...]


@dataclass(frozen=True)
class CutoffExpectation:
    exact: float
    reference: float


def _arrays(d: Dist | LevelDist) -> tuple[np.ndarray, np.ndarray, tuple[int, ...] | None]:
    """Decreasing log2-probabilities and log2-counts; symbol order for explicit inputs."""
    if isinstance(d, LevelDist):
        return d.log2_prob, d.log2_count, None
    order = tuple(x for x in decreasing_rearrangement(d) if d.probs[x] > 0)
    lp = np.log2(np.array([d.probs[x] for x in order]))
    return lp, np.zeros_like(lp), order


def _head(lp: np.ndarray, lc: np.ndarray, eps: float):
    """Locate the boundary level of the head set.

    Returns (i, taken, residual): levels before i are fully in the head,
    ``taken`` symbols of level i are in it, and the next symbol of level i
    is the star symbol carrying ``residual`` of the remaining mass.
    """
    w = np.exp2(lp + lc)
    # tails[i] = mass strictly after level i, summed from the bottom for accuracy
    tails = np.concatenate((np.cumsum(w[::-1])[::-1][1:], [0.0]))
    i = int(np.argmax(tails <= eps + HEAD_TOL))
    if lc[i] >= 1000:
        raise ResourceCapError("level multiplicity exceeds the float range")
    q = 2.0 ** float(lp[i])
    c = 2.0 ** float(lc[i])
    x = (eps + HEAD_TOL - tails[i]) / q
    excluded = min(math.floor(x) + 1.0, c) if x >= 0 else 1.0
    taken = max(c - excluded, 0.0)
    residual = excluded * q + tails[i] - eps
    residual = float(min(max(residual, np.finfo(float).tiny), q))
    return i, taken, residual


def smoothing_set(d: Dist | LevelDist, eps: float) -> SmoothingResult:
    """Head set: longest prefix of the decreasing rearrangement with mass below 1 - eps."""
    eps = check_eps(eps)
    lp, lc, order = _arrays(d)
    i, taken, residual = _head(lp, lc, eps)
    counts = np.exp2(lc[:i])
    head_count_f = float(np.sum(counts)) + taken
    head_count = int(round(head_count_f)) if head_count_f < 2**53 else int(head_count_f)
    head = star = None
    if order is not None:
        head = order[:head_count]
        star = order[head_count]
    return SmoothingResult(
        head_mass=1.0 - eps - residual,
        head_count=head_count,
        residual=residual,
        star_prob=2.0 ** float(lp[i]),
        head=head,
        star=star,
    )


def _log2_power_sum(lp: np.ndarray, lc: np.ndarray, eps: float, alpha: float) -> float:
    """log2( sum_{head} p^alpha + residual^alpha )."""
    i, taken, residual = _head(lp, lc, eps)
    terms = list(lc[:i] + alpha * lp[:i])
    if taken > 0:
        terms.append(math.log2(taken) + alpha * float(lp[i]))
    terms.append(alpha * math.log2(residual))
    return log2sumexp2(terms)


def smooth_renyi(d: Dist | LevelDist, alpha: float, eps: float) -> float:
    """Closed-form smooth Renyi entropy (1/(1-alpha)) log(sum_A p^alpha + residual^alpha)."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps)
    lp, lc, _ = _arrays(d)
    return _log2_power_sum(lp, lc, eps, alpha) / (1.0 - alpha)


def smooth_renyi_full(d: Dist | LevelDist, alpha: float, eps: float) -> SmoothingResult:
    """smoothing_set with the entropy filled in."""
    base = smoothing_set(d, eps)
    h = smooth_renyi(d, alpha, eps)
    return SmoothingResult(**{**base.__dict__, "entropy": h})


def power_sum(d: Dist, alpha: float, delta: float) -> float:
    """(sum_A p^alpha + residual^alpha)^{1/alpha}, the per-row factor inside alpha-expectations.

    delta = 1 gives 0.
    """
    if delta >= 1.0:
        return 0.0
    lp, lc, _ = _arrays(d)
    return 2.0 ** (_log2_power_sum(lp, lc, max(delta, 0.0), alpha) / alpha)


# ---------------------------------------------------------------------------
# brute-force ball search


def _expand(partial: np.ndarray, sums: np.ndarray, vals: np.ndarray, budget: float):
    rows = np.repeat(partial, vals.size, axis=0)
    add = np.tile(vals, partial.shape[0])
    new_sums = np.repeat(sums, vals.size) + add
    keep = new_sums <= budget + 1e-12
    return np.column_stack([rows[keep], add[keep]]), new_sums[keep]


def _removal_values(p: float, eps: float, step: float) -> np.ndarray:
    top = min(p, eps)
    vals = np.arange(0.0, top + 1e-15, step)
    if p <= eps + 1e-15:
        vals = np.append(vals[vals < p - 1e-15], p)
    return vals


def removal_grid(p: Sequence[float], eps: float, step: float, boundary: bool = True,
                 max_points: int = 50_000_000) -> Iterator[np.ndarray]:
    """Yield chunks of removal vectors r with 0 <= r <= p on a grid of the given step.

    With ``boundary`` each cell in turn absorbs ``eps - sum(others)`` exactly,
    so every point removes exactly ``eps``; otherwise all grid points with
    total removal at most ``eps`` are produced.
    """
    p = np.asarray(p, dtype=np.float64)
    k = p.size
    grids = [_removal_values(float(v), eps, step) for v in p]
    est = 1.0
    for g in grids:
        est *= g.size
    if est > max_points * k and math.comb(int(eps / step) + k, k) > max_points:
        raise ResourceCapError(f"ball grid too large for step {step}")
    cells = range(k) if boundary else [None]
    for proj in cells:
        free = [c for c in range(k) if c != proj]
        if not free:
            if eps <= p[proj] + 1e-15:
                out = np.zeros((1, k))
                out[0, proj] = eps
                yield out
            continue
        first, rest = free[0], free[1:]
        for v in grids[first]:
            partial = np.array([[v]])
            sums = np.array([v])
            for c in rest:
                partial, sums = _expand(partial, sums, grids[c], eps)
                if sums.size == 0:
                    break
            if sums.size == 0:
                continue
            out = np.zeros((sums.size, k))
            out[:, free] = partial
            if proj is not None:
                r = eps - sums
                ok = (r >= -1e-15) & (r <= p[proj] + 1e-15)
                out = out[ok]
                out[:, proj] = np.clip(r[ok], 0.0, p[proj])
            if out.shape[0]:
                yield out


def ball_grid_minimum(p: Sequence[float], eps: float, step: float,
                      objective: Callable[[np.ndarray], np.ndarray], boundary: bool = True) -> float:
    """Minimum of ``objective(P - r)`` over the removal grid (rows are candidate Q)."""
    p = np.asarray(p, dtype=np.float64)
    best = math.inf
    for r in removal_grid(p, eps, step, boundary):
        q = np.clip(p[None, :] - r, 0.0, None)
        best = min(best, float(np.min(objective(q))))
    return best


def smooth_renyi_bruteforce(d: Dist, alpha: float, eps: float, grid_step: float) -> float:
    """Grid search of (1/(1-alpha)) log sum Q^alpha over the eps-ball below P."""
    alpha = check_alpha(alpha)
    eps = check_eps(eps)
    p = np.array([v for v in d.probs if v > 0])
    if p.size > 6:
        raise ResourceCapError("brute-force ball search supports at most 6 symbols")
    if not 0 < grid_step <= 0.01:
        raise ParameterError("grid_step must lie in (0, 0.01]")
    if eps == 0.0:
        return log2sumexp2(alpha * np.log2(p)) / (1.0 - alpha)

    def objective(q: np.ndarray) -> np.ndarray:
        return np.log2(np.sum(q ** alpha, axis=1)) / (1.0 - alpha)

    return ball_grid_minimum(p, eps, grid_step, objective)


# ---------------------------------------------------------------------------
# epsilon-cutoff transform


def _value_arrays(z: ValueDist | LevelDist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(z, LevelDist):
        z = information_density(z)
    return z.values, z.log2_mass


def _scan(values: np.ndarray, masses: np.ndarray, eps: float) -> tuple[int, float]:
    """Index of eta (values ascending) and beta, scanning the support from the top."""
    above = np.concatenate((np.cumsum(masses[::-1])[::-1][1:], [0.0]))
    hits = np.nonzero(above + masses > eps + CUTOFF_TOL)[0]
    if hits.size == 0:
        return 0, 1.0
    i = int(hits[-1])
    beta = (eps - above[i]) / masses[i]
    return i, min(max(beta, 0.0), np.nextafter(1.0, 0.0))


def cutoff_params(z: ValueDist | LevelDist, eps: float) -> CutoffParams:
    """eta and beta with P{Z > eta} + beta P{Z = eta} = eps; eta is an atom of Z."""
    eps = check_eps(eps, allow_zero=False)
    values, lw = _value_arrays(z)
    i, beta = _scan(values, np.exp2(lw), eps)
    return CutoffParams(float(values[i]), float(beta))


def cutoff_exp_moment(z: ValueDist | LevelDist, s: float, eps: float) -> float:
    """(1/s) log2 E[<2^{sZ}>_eps]: full weight below eta, (1 - beta) at eta, none above."""
    if not s > 0:
        raise ParameterError("s must be positive")
    eps = check_eps(eps, allow_zero=False)
    values, lw = _value_arrays(z)
    i, beta = _scan(values, np.exp2(lw), eps)
    terms = list(lw[:i] + s * values[:i])
    if beta < 1.0:
        terms.append(math.log2(1.0 - beta) + lw[i] + s * values[i])
    total = log2sumexp2(terms)
    return NEG_INF if total == NEG_INF else total / s


def cutoff_expectation(z: ValueDist | LevelDist, eps: float) -> CutoffExpectation:
    """Exact E[<Z>_eps] and the reference (1 - eps) E[Z] - sqrt(Var Z) f_G(eps)."""
    from .asymptotics import f_gauss

    eps = check_eps(eps, allow_zero=False)
    values, lw = _value_arrays(z)
    m = np.exp2(lw)
    i, beta = _scan(values, m, eps)
    exact = float(np.sum(m[:i] * values[:i]) + (1.0 - beta) * m[i] * values[i])
    mean = float(np.sum(m * values))
    var = float(np.sum(m * (values - mean) ** 2))
    return CutoffExpectation(exact, (1.0 - eps) * mean - math.sqrt(var) * f_gauss(eps))


# ---------------------------------------------------------------------------
# tilted distribution


def tilted_row(row: Dist, alpha: float, delta: float) -> tuple[tuple[float, ...] | None, tuple[int, ...], int | None, float]:
    """Tilted row: mass ∝ p^alpha on the head, ∝ residual^alpha on the star symbol."""
    if delta >= 1.0:
        return None, (), None, 0.0
    sm = smoothing_set(row, max(delta, 0.0))
    weights = {x: row.probs[x] ** alpha for x in sm.head}
    weights[sm.star] = sm.residual ** alpha
    total = math.fsum(weights.values())
    q = tuple(weights.get(x, 0.0) / total for x in range(len(row)))
    return q, sm.head, sm.star, sm.residual


def tilted_conditional(c: CondDist, alpha: float, delta: Sequence[float] | object) -> TiltedCond:
    alpha = check_alpha(alpha)
    deltas = _delta_values(delta, len(c.rows))
    rows, heads, stars, res = [], [], [], []
    for y, row in enumerate(c.rows):
        dy = deltas[y]
        if not 0.0 <= dy <= 1.0:
            raise ParameterError(f"delta({y}) = {dy} outside [0, 1]")
        q, h, s, m = tilted_row(row, alpha, dy)
        rows.append(q)
        heads.append(h)
        stars.append(s)
        res.append(m)
    return TiltedCond(tuple(rows), tuple(heads), tuple(stars), tuple(res))


def _delta_values(delta, n: int) -> tuple[float, ...]:
    vals = getattr(delta, "delta", delta)
    if isinstance(vals, (int, float)):
        return (float(vals),) * n
    vals = tuple(float(v) for v in vals)
    if len(vals) != n:
        raise ParameterError(f"delta profile has {len(vals)} entries, expected {n}")
    return vals
