"""Uniform view of conditional rows for joint distributions and type families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import JointDist, TypeFamily, decreasing_rearrangement


@dataclass(frozen=True)
class Row:
    """One conditioning group: weight and its conditional levels in decreasing order.

    For a joint distribution each group is a single y, every level is a
    single symbol (``symbols`` lists them) and ``log2_count`` is zero.
    For a type family a group is a whole y-type.
    """

    log2_weight: float
    log2_prob: np.ndarray
    log2_count: np.ndarray
    symbols: tuple[int, ...] | None = None

    @property
    def weight(self) -> float:
        return 2.0 ** self.log2_weight

    def masses(self) -> np.ndarray:
        return self.counts() * np.exp2(self.log2_prob)

    def counts(self) -> np.ndarray:
        # counts are integers; rounding removes the log-space drift
        return np.rint(np.exp2(self.log2_count))


def rows_of(j: JointDist | TypeFamily) -> list[Row]:
    if isinstance(j, TypeFamily):
        return [
            Row(e.log2_prob + math.log2(e.count), e.cond_levels.log2_prob, e.cond_levels.log2_count)
            for e in j.entries
        ]
    a = j.as_array()
    py = a.sum(axis=0)
    out = []
    for y in range(a.shape[1]):
        p = a[:, y] / py[y]
        order = [x for x in decreasing_rearrangement(tuple(p)) if p[x] > 0]
        lp = np.log2(p[order])
        out.append(Row(math.log2(py[y]), lp, np.zeros_like(lp), tuple(order)))
    return out


def cumulative_at(row: Row, j: float) -> float:
    """Conditional mass of the j most likely outcomes of the row."""
    counts = row.counts()
    cum_counts = np.cumsum(counts)
    masses = row.masses()
    full = int(np.searchsorted(cum_counts, j, side="right"))
    mass = float(np.sum(masses[:full]))
    if full < counts.size:
        taken = j - (cum_counts[full - 1] if full else 0.0)
        mass += taken * 2.0 ** row.log2_prob[full]
    return min(mass, 1.0)


def prob_at_rank(row: Row, k: float) -> float:
    """Conditional probability of the k-th most likely outcome (zero beyond the support)."""
    cum_counts = np.cumsum(row.counts())
    idx = int(np.searchsorted(cum_counts, k - 0.5, side="left"))
    if idx >= cum_counts.size:
        return 0.0
    return 2.0 ** float(row.log2_prob[idx])
