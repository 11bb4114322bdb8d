"""Error-tolerant task encoding: lambda caps, greedy sub-partitions, erasure layer and exact moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from ._numeric import check_eps, check_rho
from ._rows import Row, rows_of
from .conditional_smooth import check_h, cutoffs_of_rows, kuzuoka_h, tilde_h
from .dist import JointDist
from .errors import BoundViolation, ParameterError, PreconditionError
from .measures import conditional_entropy, shannon_entropy
from .oneshot import RhoMoment

BOUND_SLACK = 1e-9
INF = math.inf


@dataclass(frozen=True)
class LambdaProfile:
    """caps[x][y]: a positive integer, or inf where the tilted conditional vanishes."""

    caps: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for row in self.caps:
            for v in row:
                if v != INF and (v < 1 or v != int(v)):
                    raise ParameterError(f"lambda cap {v} is not a positive integer")

    def column(self, y: int) -> dict[int, float]:
        return {x: row[y] for x, row in enumerate(self.caps)}


@dataclass(frozen=True)
class TaskAssignment:
    """f[x][y] in {0..M}; cells[y][m-1] is L(m, y); erase[y][m-1] the probability E voids that cell."""

    M: int
    f: tuple[tuple[int, ...], ...]
    cells: tuple[tuple[tuple[int, ...], ...], ...]
    erase: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for y, cells in enumerate(self.cells):
            if len(cells) > self.M:
                raise ParameterError(f"y={y} uses {len(cells)} cells, only {self.M} labels")
            if len(self.erase[y]) != len(cells):
                raise ParameterError(f"y={y}: one erasure probability per cell required")
            if any(not 0.0 <= e <= 1.0 for e in self.erase[y]):
                raise ParameterError(f"y={y}: erasure probability outside [0, 1]")
            seen = [x for c in cells for x in c]
            if len(seen) != len(set(seen)):
                raise ParameterError(f"y={y}: cells overlap")
            for x, row in enumerate(self.f):
                m = row[y]
                if (m == 0) != (x not in seen) or (m and x not in cells[m - 1]):
                    raise ParameterError(f"f({x}, {y}) = {m} disagrees with the cells")

    def cell_of(self, x: int, y: int) -> tuple[int, ...]:
        m = self.f[x][y]
        return () if m == 0 else self.cells[y][m - 1]

    def to_json(self) -> list[dict]:
        return [{"y": y, "cells": [list(c) for c in cells], "erase": list(self.erase[y])}
                for y, cells in enumerate(self.cells)]


def _tilted_prefix(row: Row, J: int, upsilon: float, alpha: float) -> dict[int, float]:
    """Tilted conditional on the first J ranks plus the upsilon-scaled rank J+1."""
    p = np.exp2(row.log2_prob)
    w = {row.symbols[k]: float(p[k]) ** alpha for k in range(min(J, p.size))}
    if J < p.size and upsilon > 0:
        w[row.symbols[J]] = (upsilon * float(p[J])) ** alpha
    total = math.fsum(w.values())
    return {x: v / total for x, v in w.items()}


def _caps(nx: int, qs: Sequence[dict[int, float]], scale: float) -> LambdaProfile:
    caps = [[INF] * len(qs) for _ in range(nx)]
    for y, q in enumerate(qs):
        for x, v in q.items():
            if v > 0:
                caps[x][y] = float(max(math.ceil(scale / v - 1e-12), 1))
    return LambdaProfile(tuple(tuple(r) for r in caps))


def avg_threshold(j: JointDist, eps: float) -> float:
    """Smallest admissible M is strictly above 2 + H(X|Y)/eps."""
    return 2.0 + conditional_entropy(j) / check_eps(eps, allow_zero=False)


def max_threshold(j: JointDist, eps: float) -> float:
    sup_h = max(shannon_entropy(j.row(y)) for y in range(j.shape[1]))
    return 2.0 + sup_h / check_eps(eps, allow_zero=False)


def _gate(M: int, threshold: float) -> None:
    if not M > threshold:
        raise PreconditionError(f"M = {M} must exceed the threshold {threshold:.6g}")


def _avg_parts(j: JointDist, rho: float, eps: float, M: int):
    rho = check_rho(rho)
    eps = check_eps(eps, allow_zero=False)
    _gate(M, avg_threshold(j, eps))
    rows = rows_of(j)
    cut = cutoffs_of_rows(rows, eps)
    alpha = 1.0 / (1.0 + rho)
    qs = [_tilted_prefix(r, cut.J, cut.upsilon, alpha) for r in rows]
    slack = eps * (M - 2) - conditional_entropy(j)
    return rows, cut, qs, 2.0 * eps / slack


def _max_parts(j: JointDist, rho: float, eps: float, M: int):
    rho = check_rho(rho)
    eps = check_eps(eps, allow_zero=False)
    _gate(M, max_threshold(j, eps))
    rows = rows_of(j)
    cuts = [cutoffs_of_rows([Row(0.0, r.log2_prob, r.log2_count)], eps) for r in rows]
    alpha = 1.0 / (1.0 + rho)
    qs = [_tilted_prefix(r, c.J, c.upsilon, alpha) for r, c in zip(rows, cuts)]
    sup_h = max(shannon_entropy(j.row(y)) for y in range(j.shape[1]))
    return rows, cuts, qs, 2.0 * eps / (eps * (M - 2) - sup_h)


def lambda_profile_avg(j: JointDist, rho: float, eps: float, M: int) -> LambdaProfile:
    """ceil(2 eps / ((eps (M-2) - H(X|Y)) Q(x|y))) on the support of the tilted conditional."""
    _, _, qs, scale = _avg_parts(j, rho, eps, M)
    return _caps(j.shape[0], qs, scale)


def lambda_profile_max(j: JointDist, rho: float, eps: float, M: int) -> LambdaProfile:
    """As the average version with per-y cutoffs and sup_y H(X|Y=y) in place of H(X|Y)."""
    _, _, qs, scale = _max_parts(j, rho, eps, M)
    return _caps(j.shape[0], qs, scale)


def bl_threshold(caps: Mapping[Hashable, float]) -> float:
    """2 sum 1/lambda + log2 |S| + 2 over the finite caps."""
    if not caps:
        return 2.0
    inv = math.fsum(1.0 / v for v in caps.values() if v != INF)
    return 2.0 * inv + math.log2(len(caps)) + 2.0


def bl_partition(caps: Mapping[Hashable, float], M: int) -> tuple[tuple, ...]:
    """Partition of the keys of ``caps`` into at most M cells, each element in a cell no larger than its cap.

    Elements are taken in ascending cap order; a cell's size limit is the
    cap of its first element, and a new cell opens once the current one
    is full.
    """
    need = bl_threshold(caps)
    if M < need - 1e-12:
        raise PreconditionError(f"M = {M} is below the partition threshold {need:.6g}")
    order = sorted(caps, key=lambda s: (caps[s], repr(s)))
    cells: list[list] = []
    limit = 0.0
    for s in order:
        if not cells or len(cells[-1]) >= limit:
            cells.append([])
            limit = caps[s]
        cells[-1].append(s)
    if len(cells) > M:
        raise AssertionError(f"greedy partition used {len(cells)} > {M} cells for caps {dict(caps)}")
    for c in cells:
        for s in c:
            if len(c) > caps[s]:
                raise AssertionError(f"cell {c} exceeds the cap {caps[s]} of {s!r}")
    return tuple(tuple(c) for c in cells)


def _assemble(j: JointDist, M: int, rows: Sequence[Row], caps: LambdaProfile,
              boundary: Sequence[tuple[int | None, float]]) -> TaskAssignment:
    """Cells from the caps per y; the cell holding the boundary symbol is voided at a matching rate.

    ``boundary[y]`` is (symbol at rank J+1, conditional mass that must be
    lost on it). Spreading that loss over the whole cell keeps both the
    conditional error and the moment contribution equal to the
    symbol-level erasure.
    """
    nx, ny = j.shape
    a = j.as_array()
    f = [[0] * ny for _ in range(nx)]
    all_cells, all_erase = [], []
    for y in range(ny):
        col = {x: c for x, c in caps.column(y).items() if c != INF}
        cells = bl_partition(col, M)
        py = a[:, y].sum()
        erase = []
        sym, lost = boundary[y]
        for m, c in enumerate(cells, start=1):
            for x in c:
                f[x][y] = m
            e = 0.0
            if sym is not None and sym in c and lost > 0:
                e = min(lost / (math.fsum(a[x, y] for x in c) / py), 1.0)
            erase.append(e)
        all_cells.append(cells)
        all_erase.append(tuple(erase))
    return TaskAssignment(M, tuple(map(tuple, f)), tuple(all_cells), tuple(all_erase))


def _boundary(row: Row, J: int, upsilon: float) -> tuple[int | None, float]:
    if J >= row.log2_prob.size or upsilon <= 0:
        return None, 0.0
    return row.symbols[J], (1.0 - upsilon) * 2.0 ** float(row.log2_prob[J])


def assignment_avg(j: JointDist, rho: float, eps: float, M: int) -> TaskAssignment:
    """Average-criterion assignment with total error eps."""
    rows, cut, qs, scale = _avg_parts(j, rho, eps, M)
    caps = _caps(j.shape[0], qs, scale)
    return _assemble(j, M, rows, caps, [_boundary(r, cut.J, cut.upsilon) for r in rows])


def assignment_max(j: JointDist, rho: float, eps: float, M: int) -> TaskAssignment:
    """Maximum-criterion assignment with every conditional error equal to eps."""
    rows, cuts, qs, scale = _max_parts(j, rho, eps, M)
    caps = _caps(j.shape[0], qs, scale)
    return _assemble(j, M, rows, caps, [_boundary(r, c.J, c.upsilon) for r, c in zip(rows, cuts)])


def task_moment(a: TaskAssignment, j: JointDist, rho: float) -> RhoMoment:
    """E|L(f(X,Y),Y)|^rho over the source and the erasure coin; voided cells count as size 0."""
    rho = check_rho(rho)
    p = j.as_array()
    total = 0.0
    for (x, y), pxy in np.ndenumerate(p):
        m = a.f[x][y]
        if m and pxy > 0:
            total += pxy * (1.0 - a.erase[y][m - 1]) * len(a.cells[y][m - 1]) ** rho
    return RhoMoment.of(total, rho)


def task_errors(a: TaskAssignment, j: JointDist) -> tuple[float, ...]:
    """P{X not executed | Y=y} per y."""
    p = j.as_array()
    out = []
    for y in range(p.shape[1]):
        col = p[:, y] / p[:, y].sum()
        ok = math.fsum(col[x] * (1.0 - a.erase[y][a.f[x][y] - 1]) for x in range(p.shape[0]) if a.f[x][y])
        out.append(max(1.0 - ok, 0.0))
    return tuple(out)


def task_error(a: TaskAssignment, j: JointDist) -> float:
    py = j.as_array().sum(axis=0)
    return math.fsum(w * e for w, e in zip(py, task_errors(a, j)))


@dataclass(frozen=True)
class TaskReport:
    """Moments, errors and both sides of the one-shot bounds, all in bits."""

    M: int
    avg_moment: float
    avg_error: float
    avg_converse: float
    avg_tilde_bound: float
    avg_bound: float
    h_smooth: float
    h_tilde: float
    h_tilde_upper: float
    max_moment: float
    max_error: float
    max_converse: float
    max_bound: float
    h_check: float

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items()} | {"unit": "bits"}


def _pos(u: float) -> float:
    return max(u, 0.0)


def one_shot_task_check(j: JointDist, rho: float, eps: float, M: int) -> TaskReport:
    """Build both assignments and check the converse and achievability bounds on them."""
    rho = check_rho(rho)
    eps = check_eps(eps, allow_zero=False)
    alpha = 1.0 / (1.0 + rho)
    h = conditional_entropy(j)
    sup_h = max(shannon_entropy(j.row(y)) for y in range(j.shape[1]))
    h_smooth = kuzuoka_h(j, alpha, eps).value
    h_tilde = tilde_h(j, alpha, eps)
    h_check = check_h(j, alpha, eps)
    tilde_upper = h_smooth + math.log2(1.0 + h / eps)
    if not h_smooth - BOUND_SLACK <= h_tilde <= tilde_upper + BOUND_SLACK:
        raise BoundViolation(f"H-tilde {h_tilde} outside [{h_smooth}, {tilde_upper}]")

    a_avg = assignment_avg(j, rho, eps, M)
    a_max = assignment_max(j, rho, eps, M)
    m_avg = task_moment(a_avg, j, rho).log_scaled
    m_max = task_moment(a_max, j, rho).log_scaled
    e_avg = task_error(a_avg, j)
    e_max = max(task_errors(a_max, j))
    slack = eps * (M - 2)
    rep = TaskReport(
        M=M,
        avg_moment=m_avg,
        avg_error=e_avg,
        avg_converse=h_smooth - math.log2(M),
        avg_tilde_bound=_pos(h_tilde - math.log2((slack - h) / (4.0 * eps))) + 1.0 / rho,
        avg_bound=_pos(h_smooth - math.log2((slack - h) / (4.0 * eps + 4.0 * h))) + 1.0 / rho,
        h_smooth=h_smooth,
        h_tilde=h_tilde,
        h_tilde_upper=tilde_upper,
        max_moment=m_max,
        max_error=e_max,
        max_converse=h_check - math.log2(M),
        max_bound=_pos(h_check - math.log2((slack - sup_h) / (4.0 * eps))) + 1.0 / rho,
        h_check=h_check,
    )
    checks = (
        (rep.avg_error <= eps + 1e-12, "average error exceeds eps"),
        (rep.max_error <= eps + 1e-12, "maximum conditional error exceeds eps"),
        (rep.avg_moment >= rep.avg_converse - BOUND_SLACK, "average converse"),
        (rep.avg_moment <= rep.avg_tilde_bound + BOUND_SLACK, "average achievability (H-tilde form)"),
        (rep.avg_moment <= rep.avg_bound + BOUND_SLACK, "average achievability"),
        (rep.max_moment >= rep.max_converse - BOUND_SLACK, "maximum converse"),
        (rep.max_moment <= rep.max_bound + BOUND_SLACK, "maximum achievability"),
    )
    for ok, what in checks:
        if not ok:
            raise BoundViolation(f"{what} failed: {rep}")
    return rep


def ceiling_bound_holds(u: float, rho: float) -> bool:
    """ceil(u)^rho < 1 + 2^rho u^rho for u > 0."""
    # subtracting 1 first keeps the comparison exact when ceil(u) = 1 and u^rho underflows against 1
    return math.ceil(u) ** rho - 1.0 < (2.0 * u) ** rho
