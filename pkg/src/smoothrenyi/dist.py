"""Finite distributions, joint/conditional views and exact i.i.d. powers.

Symbol ids are zero-based positions in the probability vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from ._numeric import LN2, log2sumexp2
from .errors import DistributionError, ResourceCapError

MASS_TOL = 1e-9
LEVEL_MASS_TOL = 1e-7
LEVEL_MERGE_TOL = 1e-12
DEFAULT_TYPE_CAP = 2_000_000


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dist:
    """Probability vector over symbols 0..k-1."""

    probs: tuple[float, ...]

    def __post_init__(self):
        _check_vector(self.probs)

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0)

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=np.float64)

    def to_json(self) -> str:
        return json.dumps({"probs": list(self.probs)})


def _check_vector(probs: Sequence[float]) -> None:
    if len(probs) == 0:
        raise DistributionError("empty probability vector")
    for p in probs:
        if not math.isfinite(p) or p < 0:
            raise DistributionError(f"negative or non-finite mass {p}")
    total = math.fsum(probs)
    if abs(total - 1.0) > MASS_TOL:
        raise DistributionError(f"mass {total:.12g} ≠ 1")


def make_dist(weights: Sequence[float]) -> Dist:
    """Validate a probability vector; no renormalization is performed."""
    probs = tuple(float(w) for w in weights)
    if not any(p > 0 for p in probs):
        raise DistributionError("at least one positive entry is required")
    return Dist(probs)


def decreasing_rearrangement(d: Dist | Sequence[float]) -> tuple[int, ...]:
    """Symbol ids sorted by decreasing mass, ties by ascending id."""
    probs = d.probs if isinstance(d, Dist) else tuple(d)
    return tuple(sorted(range(len(probs)), key=lambda i: (-probs[i], i)))


@dataclass(frozen=True)
class CondDist:
    y_marginal: Dist
    rows: tuple[Dist, ...]


@dataclass(frozen=True)
class JointDist:
    """Joint mass P(x, y); rows index x and columns index y.

    Columns with zero y-marginal are removed at construction; ``y_labels``
    keeps the original column ids.
    """

    probs: tuple[tuple[float, ...], ...]
    y_labels: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.probs), len(self.probs[0])

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=np.float64)

    @property
    def y_marginal(self) -> Dist:
        a = self.as_array()
        return Dist(tuple(float(v) for v in a.sum(axis=0) / a.sum()))

    @property
    def x_marginal(self) -> Dist:
        a = self.as_array()
        return Dist(tuple(float(v) for v in a.sum(axis=1) / a.sum()))

    def row(self, y: int) -> Dist:
        """Conditional distribution P_{X|Y=y}."""
        col = self.as_array()[:, y]
        return Dist(tuple(float(v) for v in col / col.sum()))

    def conditional(self) -> CondDist:
        return CondDist(self.y_marginal, tuple(self.row(y) for y in range(self.shape[1])))

    def to_json(self) -> str:
        return json.dumps({"probs": [list(r) for r in self.probs]})


def make_joint(matrix: Sequence[Sequence[float]]) -> JointDist:
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DistributionError("joint distribution must be a non-empty matrix")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise DistributionError("joint masses must be finite and nonnegative")
    total = math.fsum(a.ravel())
    if abs(total - 1.0) > MASS_TOL:
        raise DistributionError(f"mass {total:.12g} ≠ 1")
    keep = [y for y in range(a.shape[1]) if a[:, y].sum() > 0]
    probs = tuple(tuple(float(a[x, y]) for y in keep) for x in range(a.shape[0]))
    return JointDist(probs, tuple(keep))


def joint_from_conditional(y_marginal: Sequence[float], rows: Sequence[Sequence[float]]) -> JointDist:
    """Build P(x, y) = P_Y(y) P(x|y) from a marginal and conditional rows (one row per y)."""
    py = make_dist(y_marginal)
    cols = [make_dist(r).probs for r in rows]
    if len(cols) != len(py):
        raise DistributionError("need one conditional row per y")
    nx = len(cols[0])
    if any(len(c) != nx for c in cols):
        raise DistributionError("conditional rows differ in length")
    return make_joint([[py.probs[y] * cols[y][x] for y in range(len(py))] for x in range(nx)])


def product_joint(px: Sequence[float], py: Sequence[float]) -> JointDist:
    return make_joint(np.outer(make_dist(px).as_array(), make_dist(py).as_array()))


def bss(delta: float) -> JointDist:
    """Binary symmetric source: X uniform, Y = X flipped with probability delta."""
    return make_joint([[(1 - delta) / 2, delta / 2], [delta / 2, (1 - delta) / 2]])


def bes(delta: float) -> JointDist:
    """Binary erasure source: Y = X or the erasure symbol (last column) w.p. delta."""
    return make_joint([[(1 - delta) / 2, 0.0, delta / 2], [0.0, (1 - delta) / 2, delta / 2]])


def bses(delta_c: float, delta_e: float) -> JointDist:
    """Binary symmetric erasure source: flip w.p. delta_c, erase w.p. delta_e."""
    ok = (1 - delta_c - delta_e) / 2
    return make_joint([[ok, delta_c / 2, delta_e / 2], [delta_c / 2, ok, delta_e / 2]])


def load_json(text: str) -> Dist | JointDist:
    """Parse {"probs": [...]} into a Dist or {"probs": [[...], ...]} into a JointDist."""
    try:
        obj = json.loads(text)
        probs = obj["probs"]
    except (ValueError, KeyError, TypeError) as exc:
        raise DistributionError(f"malformed distribution JSON: {exc}") from exc
    if not isinstance(probs, list) or not probs:
        raise DistributionError("'probs' must be a non-empty list")
    if isinstance(probs[0], list):
        return make_joint(probs)
    return make_dist(probs)


# ---------------------------------------------------------------------------
# level-aggregated distributions


@dataclass(frozen=True)
class LevelDist:
    """Distribution aggregated into (log2-probability, multiplicity) levels.

    ``log2_count`` holds log2 of the multiplicity so that counts beyond
    float range are representable; levels are strictly decreasing.
    """

    log2_prob: np.ndarray
    log2_count: np.ndarray

    def __post_init__(self):
        lp, lc = self.log2_prob, self.log2_count
        if lp.shape != lc.shape or lp.ndim != 1 or lp.size == 0:
            raise DistributionError("level arrays must be equal-length 1-D")
        if np.any(np.diff(lp) >= 0):
            raise DistributionError("levels must be strictly decreasing")
        if np.any(lp > 1e-12) or np.any(lc < -1e-9):
            raise DistributionError("invalid level probability or count")
        total = log2sumexp2(lp + lc)
        if abs(2.0 ** total - 1.0) > LEVEL_MASS_TOL:
            raise DistributionError(f"level mass {2.0 ** total:.12g} ≠ 1")

    def __len__(self) -> int:
        return int(self.log2_prob.size)

    @property
    def levels(self) -> tuple[tuple[float, int], ...]:
        return tuple(zip(self.log2_prob.tolist(), self.counts))

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(round(2.0 ** c)) for c in self.log2_count)

    def masses(self) -> np.ndarray:
        """Total probability of each level."""
        return np.exp2(self.log2_prob + self.log2_count)

    @classmethod
    def from_dist(cls, d: Dist) -> "LevelDist":
        p = d.as_array()
        p = p[p > 0]
        lp, lc = _merge(np.log2(p), np.zeros_like(p))
        return cls(_frozen(lp), _frozen(lc))


@dataclass(frozen=True)
class ValueDist:
    """Finite distribution of a real random variable, stored as (value, log2 mass)."""

    values: np.ndarray
    log2_mass: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.log2_mass.shape or self.values.size == 0:
            raise DistributionError("value arrays must be equal-length and non-empty")
        if np.any(np.diff(self.values) <= 0):
            raise DistributionError("values must be strictly increasing")
        total = 2.0 ** log2sumexp2(self.log2_mass)
        if abs(total - 1.0) > LEVEL_MASS_TOL:
            raise DistributionError(f"mass {total:.12g} ≠ 1")

    def masses(self) -> np.ndarray:
        return np.exp2(self.log2_mass)

    def mean(self) -> float:
        return float(np.sum(self.masses() * self.values))

    def variance(self) -> float:
        m = self.mean()
        return float(np.sum(self.masses() * (self.values - m) ** 2))

    def abs_third(self) -> float:
        m = self.mean()
        return float(np.sum(self.masses() * np.abs(self.values - m) ** 3))


def value_dist(values: Sequence[float], probs: Sequence[float]) -> ValueDist:
    """Distribution of Z taking ``values`` with ``probs``; equal values are merged."""
    v = np.asarray(values, dtype=np.float64)
    p = np.asarray(make_dist(probs).probs)
    if v.shape != p.shape:
        raise DistributionError("values and probs differ in length")
    keep = p > 0
    key, lw = _merge(v[keep], np.log2(p[keep]), descending=False)
    return ValueDist(_frozen(key), _frozen(lw))


def information_density(d: Dist | LevelDist) -> ValueDist:
    """Distribution of log2(1/P(X)) in bits."""
    ld = d if isinstance(d, LevelDist) else LevelDist.from_dist(d)
    # levels run in decreasing probability, so -log2 p is already increasing
    vals = -ld.log2_prob
    lw = ld.log2_prob + ld.log2_count
    return ValueDist(_frozen(vals), _frozen(lw))


def _merge(keys: np.ndarray, logw: np.ndarray, descending: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Sort by key and merge keys within LEVEL_MERGE_TOL, adding weights in log2 domain."""
    order = np.argsort(-keys if descending else keys, kind="stable")
    keys, logw = keys[order], logw[order]
    gap = np.abs(np.diff(keys)) > LEVEL_MERGE_TOL
    starts = np.concatenate(([0], np.nonzero(gap)[0] + 1))
    peak = np.maximum.reduceat(logw, starts)
    rep = np.repeat(peak, np.diff(np.append(starts, keys.size)))
    summed = np.add.reduceat(np.exp2(logw - rep), starts)
    return keys[starts].copy(), peak + np.log2(summed)


@lru_cache(maxsize=256)
def _compositions(n: int, k: int) -> np.ndarray:
    if k == 1:
        out = np.array([[n]], dtype=np.int64)
    else:
        blocks = []
        for first in range(n, -1, -1):
            sub = _compositions(n - first, k - 1)
            blocks.append(np.column_stack([np.full(len(sub), first, dtype=np.int64), sub]))
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def _type_count(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def _power_levels(keys: np.ndarray, log2_mult: np.ndarray, n: int, cap: int, descending: bool):
    """n-fold sum over compositions: key = N·keys, weight = multinomial · Π mult^N."""
    k = keys.size
    if _type_count(n, k) > cap:
        raise ResourceCapError(f"{_type_count(n, k)} types exceed cap {cap} (n={n}, k={k})")
    comps = _compositions(n, k)
    lw = (gammaln(n + 1) - gammaln(comps + 1).sum(axis=1)) / LN2 + comps @ log2_mult
    return _merge(comps @ keys, lw, descending=descending)


def iid_power(d: Dist | LevelDist, n: int, cap: int = DEFAULT_TYPE_CAP) -> LevelDist:
    """Exact level representation of the n-fold product of d.

    Compositions are enumerated over distinct probability values, so
    the cap applies to C(n+g-1, g-1) with g distinct masses.
    """
    if n < 1 or int(n) != n:
        raise DistributionError(f"n must be a positive integer, got {n}")
    base = d if isinstance(d, LevelDist) else LevelDist.from_dist(d)
    lp, lc = _power_levels(base.log2_prob, base.log2_count, int(n), cap, descending=True)
    return LevelDist(_frozen(lp), _frozen(lc))


def value_power(z: ValueDist, n: int, cap: int = DEFAULT_TYPE_CAP) -> ValueDist:
    """Distribution of Z_1 + ... + Z_n for i.i.d. copies of z."""
    if n < 1 or int(n) != n:
        raise DistributionError(f"n must be a positive integer, got {n}")
    vals, lw = _power_levels(z.values, z.log2_mass, int(n), cap, descending=False)
    return ValueDist(_frozen(vals), _frozen(lw))


def level_product(a: LevelDist, b: LevelDist) -> LevelDist:
    """Levels of the product distribution of independent a and b."""
    lp = (a.log2_prob[:, None] + b.log2_prob[None, :]).ravel()
    lc = (a.log2_count[:, None] + b.log2_count[None, :]).ravel()
    lp, lc = _merge(lp, lc)
    return LevelDist(_frozen(lp), _frozen(lc))


_POINT = None


def _point_level() -> LevelDist:
    global _POINT
    if _POINT is None:
        _POINT = LevelDist(_frozen([0.0]), _frozen([0.0]))
    return _POINT


@dataclass(frozen=True)
class TypeEntry:
    y_type: tuple[int, ...]
    log2_prob: float
    count: int
    cond_levels: LevelDist

    @property
    def y_type_prob(self) -> float:
        """Probability of one y-sequence of this type."""
        return 2.0 ** self.log2_prob


@dataclass(frozen=True)
class TypeFamily:
    """Product-source conditionals grouped by the type of the y-sequence."""

    entries: tuple[TypeEntry, ...]
    n: int

    def __post_init__(self):
        lw = [e.log2_prob + math.log2(e.count) for e in self.entries]
        total = 2.0 ** log2sumexp2(lw)
        if abs(total - 1.0) > LEVEL_MASS_TOL:
            raise DistributionError(f"type family mass {total:.12g} ≠ 1")

    def __len__(self) -> int:
        return len(self.entries)


def joint_iid_power(j: JointDist, n: int, cap: int = DEFAULT_TYPE_CAP) -> TypeFamily:
    """Group (X^n, Y^n) by y-type; each entry holds the conditional levels of X^n given one y^n."""
    if n < 1 or int(n) != n:
        raise DistributionError(f"n must be a positive integer, got {n}")
    n = int(n)
    m = j.shape[1]
    if _type_count(n, m) > cap:
        raise ResourceCapError(f"{_type_count(n, m)} y-types exceed cap {cap}")
    py = j.y_marginal.probs
    rows = [LevelDist.from_dist(j.row(y)) for y in range(m)]
    powers: dict[tuple[int, int], LevelDist] = {}

    def row_power(y: int, t: int) -> LevelDist:
        if t == 0:
            return _point_level()
        if (y, t) not in powers:
            powers[(y, t)] = iid_power(rows[y], t, cap)
        return powers[(y, t)]

    entries = []
    for t in _compositions(n, m):
        t = tuple(int(v) for v in t)
        lprob = sum(ti * math.log2(py[y]) for y, ti in enumerate(t) if ti)
        count = math.factorial(n)
        for ti in t:
            count //= math.factorial(ti)
        cond = _point_level()
        for y, ti in enumerate(t):
            if ti:
                cond = level_product(cond, row_power(y, ti))
        entries.append(TypeEntry(t, lprob, count, cond))
    return TypeFamily(tuple(entries), n)
