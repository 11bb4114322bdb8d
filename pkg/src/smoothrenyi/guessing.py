"""Guessing with a giving-up policy: optimal strategies, exact moments and a seeded simulator."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._numeric import NEG_INF, check_eps, check_rho
from ._rows import Row, rows_of
from .conditional_smooth import GuessCutoffs, check_h, cutoffs_of_rows, smooth_conditional
from .dist import Dist, JointDist, TypeFamily, decreasing_rearrangement
from .errors import BoundViolation, ParameterError, ResourceCapError
from .measures import conditional_entropy, shannon_entropy
from .oneshot import RhoMoment

DEFAULT_RANK_CAP = 10_000_000
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class GiveUpPolicy:
    """Per-rank giving-up probabilities as consecutive runs; every rank past the runs gives up."""

    runs: tuple[tuple[int, float], ...]

    def __post_init__(self):
        for length, pi in self.runs:
            if length < 0 or not 0.0 <= pi <= 1.0:
                raise ParameterError(f"bad policy run ({length}, {pi})")

    def pi(self, k: int) -> float:
        start = 0
        for length, pi in self.runs:
            if k <= start + length:
                return pi
            start += length
        return 1.0

    def survival(self, k: int) -> float:
        """Probability of reaching and asking the k-th question."""
        s, start = 1.0, 0
        for length, pi in self.runs:
            if k <= start:
                break
            take = min(length, k - start)
            s *= (1.0 - pi) ** take
            start += take
        return s if k <= start else 0.0


def explicit_policy(pis: Sequence[float]) -> GiveUpPolicy:
    return GiveUpPolicy(tuple((1, float(p)) for p in pis))


@dataclass(frozen=True)
class GuessStrategy:
    """Guessing orders per y (None when ranks follow the decreasing rearrangement) and give-up policies."""

    order: tuple[tuple[int, ...], ...] | None
    policy: tuple[GiveUpPolicy, ...]


@dataclass(frozen=True)
class StrategyLimits:
    J: int | tuple[int, ...]
    xi: float | tuple[float, ...]
    moment: RhoMoment
    error_avg: float
    error_max: float


def _orders(j: JointDist | TypeFamily) -> tuple[tuple[int, ...], ...] | None:
    if isinstance(j, TypeFamily):
        return None
    a = j.as_array()
    return tuple(decreasing_rearrangement(tuple(a[:, y])) for y in range(a.shape[1]))


def _cutoff_policy(cut: GuessCutoffs) -> GiveUpPolicy:
    return GiveUpPolicy(((cut.J, 0.0), (1, 1.0 - cut.upsilon)))


def optimal_strategy_avg(j: JointDist | TypeFamily, eps: float, rho: float = 1.0,
                         cap_ranks: int = DEFAULT_RANK_CAP) -> tuple[GuessStrategy, StrategyLimits]:
    """Decreasing order, no give-up before rank J, a common continuation probability at J+1."""
    eps = check_eps(eps, allow_zero=False)
    rows = rows_of(j)
    cut = cutoffs_of_rows(rows, eps)
    pol = _cutoff_policy(cut)
    strat = GuessStrategy(_orders(j), (pol,) * len(rows))
    return strat, _limits(strat, j, rho, cut.J, cut.xi, cap_ranks)


def optimal_strategy_max(j: JointDist | TypeFamily, eps: float, rho: float = 1.0,
                         cap_ranks: int = DEFAULT_RANK_CAP) -> tuple[GuessStrategy, StrategyLimits]:
    """Per-y cutoffs J(y), xi(y): every conditional error equals eps."""
    eps = check_eps(eps, allow_zero=False)
    rows = rows_of(j)
    cuts = [cutoffs_of_rows([Row(0.0, r.log2_prob, r.log2_count)], eps) for r in rows]
    strat = GuessStrategy(_orders(j), tuple(_cutoff_policy(c) for c in cuts))
    return strat, _limits(strat, j, rho, tuple(c.J for c in cuts), tuple(c.xi for c in cuts), cap_ranks)


def _limits(strat, j, rho, J, xi, cap_ranks) -> StrategyLimits:
    per_y = conditional_errors(strat, j)
    weights = [r.weight for r in rows_of(j)]
    err = 1.0 - math.fsum(w * (1.0 - e) for w, e in zip(weights, per_y))
    return StrategyLimits(J, xi, guess_moment(strat, j, rho, cap_ranks), err, max(per_y))


# ---------------------------------------------------------------------------
# exact moments


class _PowerSums:
    """Block sums of k^rho: exact integers for integer rho, a shared prefix table otherwise."""

    def __init__(self, rho: float, cap: int):
        self.rho = rho
        self.budget = int(cap)
        self.exact = float(rho).is_integer()
        self.prefix = np.zeros(1)

    def spend(self, n: int) -> None:
        self.budget -= n
        if self.budget < 0:
            raise ResourceCapError("rank summation cap exceeded")

    def block(self, a: int, b: int) -> float:
        if b < a:
            return 0.0
        if self.exact:
            p = int(self.rho)
            return float(_faulhaber(b, p) - _faulhaber(a - 1, p))
        have = self.prefix.size - 1
        if b > have:
            self.spend(b - have)
            ks = np.arange(have + 1, b + 1, dtype=np.float64)
            self.prefix = np.concatenate((self.prefix, self.prefix[-1] + np.cumsum(ks ** self.rho)))
        return float(self.prefix[b] - self.prefix[a - 1])


def _faulhaber(n: int, p: int) -> int:
    """sum_{k=1}^{n} k^p as an exact integer."""
    if n <= 0:
        return 0
    sums = [n]
    for q in range(1, p + 1):
        acc = (n + 1) ** (q + 1) - 1
        for i in range(q):
            acc -= math.comb(q + 1, i) * sums[i]
        sums.append(acc // (q + 1))
    return sums[p]


def _row_moment(row: Row, pol: GiveUpPolicy, sums: _PowerSums) -> tuple[float, float]:
    """(sum_k k^rho p(k) S(k), sum_k p(k) S(k)) for one row under a run policy."""
    probs = np.exp2(row.log2_prob)
    bounds = [0] + list(itertools.accumulate(int(round(c)) for c in row.counts()))
    moment = success = 0.0
    start, surv = 0, 1.0
    for length, pi in pol.runs + ((math.inf, 1.0),):
        if surv == 0.0:
            break
        keep = 1.0 - pi
        stop = start + length
        if keep > 0.0:
            for lvl in range(probs.size):
                lo = max(bounds[lvl] + 1, start + 1)
                hi = int(min(bounds[lvl + 1], stop))
                if hi < lo:
                    continue
                first = surv * keep ** (lo - start)
                if keep == 1.0:
                    moment += probs[lvl] * first * sums.block(lo, hi)
                    success += probs[lvl] * first * (hi - lo + 1)
                    continue
                sums.spend(hi - lo + 1)
                ks = np.arange(lo, hi + 1, dtype=np.float64)
                w = first * keep ** (ks - lo)
                moment += probs[lvl] * float(np.sum(ks ** sums.rho * w))
                success += probs[lvl] * float(np.sum(w))
        surv *= keep ** length
        start = stop
    return moment, success


def _explicit_table(strat: GuessStrategy, j: JointDist) -> np.ndarray:
    """P{G = k, Y = y} for k = 0..|X| as a (|X|+1, |Y|) array."""
    a = j.as_array()
    nx, ny = a.shape
    out = np.zeros((nx + 1, ny))
    for y in range(ny):
        pol = strat.policy[y]
        for k, x in enumerate(strat.order[y], start=1):
            s = pol.survival(k)
            out[k, y] += a[x, y] * s
            out[0, y] += a[x, y] * (1.0 - s)
    return out


def guess_distribution(strat: GuessStrategy, j: JointDist) -> np.ndarray:
    """P{G = k} for k = 0..|X|; G = 0 is the give-up outcome."""
    return _explicit_table(strat, j).sum(axis=1)


def guess_moment(strat: GuessStrategy, j: JointDist | TypeFamily, rho: float,
                 cap_ranks: int = DEFAULT_RANK_CAP) -> RhoMoment:
    """Exact E[G^rho] with G = 0 on giving up."""
    rho = check_rho(rho)
    if isinstance(j, JointDist) and strat.order is not None:
        dist = guess_distribution(strat, j)
        ks = np.arange(dist.size, dtype=np.float64)
        return RhoMoment.of(float(np.sum(dist[1:] * ks[1:] ** rho)), rho)
    sums = _PowerSums(rho, cap_ranks)
    total = math.fsum(r.weight * _row_moment(r, pol, sums)[0] for r, pol in zip(rows_of(j), strat.policy))
    return RhoMoment.of(total, rho)


def guess_moment_tailsum(strat: GuessStrategy, j: JointDist, rho: float) -> float:
    """E[G^rho] through sum_k (k^rho - (k-1)^rho) P{G >= k}."""
    rho = check_rho(rho)
    dist = guess_distribution(strat, j)
    tail = np.cumsum(dist[::-1])[::-1]
    ks = np.arange(1, dist.size, dtype=np.float64)
    return float(np.sum((ks ** rho - (ks - 1) ** rho) * tail[1:]))


def conditional_errors(strat: GuessStrategy, j: JointDist | TypeFamily) -> tuple[float, ...]:
    """P{G = 0 | group} per y (per y-type for type families)."""
    if isinstance(j, JointDist) and strat.order is not None:
        t = _explicit_table(strat, j)
        return tuple(float(v) for v in t[0] / t.sum(axis=0))
    sums = _PowerSums(1.0, DEFAULT_RANK_CAP)
    return tuple(1.0 - _row_moment(r, pol, sums)[1] for r, pol in zip(rows_of(j), strat.policy))


def error_probability(strat: GuessStrategy, j: JointDist | TypeFamily) -> float:
    weights = [r.weight for r in rows_of(j)]
    return 1.0 - math.fsum(w * (1.0 - e) for w, e in zip(weights, conditional_errors(strat, j)))


# ---------------------------------------------------------------------------
# one-shot sandwich


@dataclass(frozen=True)
class GuessReport:
    avg_lower: float
    avg_moment: float
    avg_upper: float
    max_lower: float
    max_moment: float
    max_upper: float
    error_avg: float
    error_max: float


def one_shot_guess_check(j: JointDist, rho: float, eps: float) -> GuessReport:
    """Exact optima under both criteria, checked against their smooth-entropy sandwiches."""
    rho = check_rho(rho)
    eps = check_eps(eps, allow_zero=False)
    alpha = 1.0 / (1.0 + rho)
    _, lim_a = optimal_strategy_avg(j, eps, rho)
    _, lim_m = optimal_strategy_max(j, eps, rho)
    h_avg = smooth_conditional(j, alpha, eps)
    h_max = check_h(j, alpha, eps)
    sup_h = max(shannon_entropy(j.row(y)) for y in range(j.shape[1]))
    rep = GuessReport(
        avg_lower=h_avg - math.log2(1.0 + conditional_entropy(j) / eps),
        avg_moment=lim_a.moment.log_scaled,
        avg_upper=h_avg,
        max_lower=h_max - math.log2(1.0 + sup_h / eps),
        max_moment=lim_m.moment.log_scaled,
        max_upper=h_max,
        error_avg=lim_a.error_avg,
        error_max=lim_m.error_max,
    )
    for lo, mid, hi, name in ((rep.avg_lower, rep.avg_moment, rep.avg_upper, "average"),
                              (rep.max_lower, rep.max_moment, rep.max_upper, "maximum")):
        if not lo - BOUND_SLACK <= mid <= hi + BOUND_SLACK:
            raise BoundViolation(f"{name}-error guessing sandwich failed: {rep}")
    return rep


# ---------------------------------------------------------------------------
# brute force and simulation


def bruteforce_guess(d: Dist, rho: float, eps: float, step: float = 0.01) -> tuple[float, GuessStrategy]:
    """Best (1/rho) log E[G^rho] over all orders and gridded per-rank give-up probabilities."""
    rho = check_rho(rho)
    p = np.asarray(d.probs, dtype=np.float64)
    if p.size > 3:
        raise ResourceCapError("brute-force guessing supports at most 3 symbols")
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    mesh = np.stack(np.meshgrid(*([grid] * p.size), indexing="ij"), axis=-1).reshape(-1, p.size)
    surv = np.cumprod(1.0 - mesh, axis=1)
    ks = np.arange(1, p.size + 1, dtype=np.float64) ** rho
    best, best_strat = math.inf, None
    for order in itertools.permutations(range(p.size)):
        q = p[list(order)]
        moment = surv @ (ks * q)
        err = 1.0 - surv @ q
        ok = err <= eps + 1e-12
        if not np.any(ok):
            continue
        i = int(np.argmin(np.where(ok, moment, np.inf)))
        if moment[i] < best:
            best = float(moment[i])
            best_strat = GuessStrategy((order,), (explicit_policy(mesh[i]),))
    return (NEG_INF if best <= 0 else math.log2(best) / rho), best_strat


@dataclass(frozen=True)
class SimResult:
    moment: float
    error: float
    stderr_moment: float
    stderr_error: float

    def to_json(self) -> dict:
        return {"moment": self.moment, "error": self.error,
                "stderr_moment": self.stderr_moment, "stderr_error": self.stderr_error}


def simulate(strat: GuessStrategy, j: JointDist, rho: float, trials: int, seed: int,
             batch: int = 100_000) -> SimResult:
    """Monte Carlo of the stage-by-stage give-up chain; batches use independent Philox streams."""
    rho = check_rho(rho)
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    if strat.order is None:
        raise ParameterError("simulation needs explicit guessing orders")
    a = j.as_array()
    nx, ny = a.shape
    flat = a.ravel()
    rank = np.zeros((nx, ny), dtype=np.int64)
    for y, order in enumerate(strat.order):
        for k, x in enumerate(order, start=1):
            rank[x, y] = k
    pis = np.array([[strat.policy[y].pi(k) for k in range(1, nx + 1)] for y in range(ny)])
    n_batches = -(-trials // batch)
    seqs = np.random.SeedSequence(seed).spawn(n_batches)
    s1 = s2 = e1 = 0.0
    left = trials
    for ss in seqs:
        m = min(batch, left)
        left -= m
        rng = np.random.Generator(np.random.Philox(ss))
        cell = rng.choice(flat.size, size=m, p=flat / flat.sum())
        xs, ys = np.divmod(cell, ny)
        k = rank[xs, ys]
        u = rng.random((m, nx))
        quit_at = u < pis[ys]
        stage = np.arange(1, nx + 1)[None, :]
        gave_up = np.any(quit_at & (stage <= k[:, None]), axis=1)
        g = np.where(gave_up, 0.0, k.astype(np.float64)) ** rho
        s1 += float(g.sum())
        s2 += float((g * g).sum())
        e1 += float(gave_up.sum())
    mean = s1 / trials
    var = max(s2 / trials - mean * mean, 0.0)
    err = e1 / trials
    return SimResult(mean, err, math.sqrt(var / trials), math.sqrt(err * (1.0 - err) / trials))
