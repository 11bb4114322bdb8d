"""Variable-length source coding with errors: smoothed Shannon codes, CGF reports and oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._numeric import NEG_INF, check_eps, check_rho, log2sumexp2
from .conditional_smooth import DeltaProfile, check_h, constant_profile, kuzuoka_h
from .dist import Dist, JointDist, LevelDist
from .errors import BoundViolation, ParameterError, ResourceCapError
from .measures import arimoto_conditional
from .smoothing import _arrays, _head, _log2_power_sum, smoothing_set, tilted_row

LENGTH_TOL = 1e-12
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class Emission:
    """Codewords sent for one (x, y) with their probabilities."""

    words: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Code:
    """emissions[x][y] and a decoder book per y mapping codewords to symbols."""

    emissions: tuple[tuple[Emission, ...], ...]
    books: tuple[tuple[tuple[str, int | None], ...], ...]
    degenerate: tuple[bool, ...] = ()

    def decode(self, word: str, y: int) -> int | None:
        for w, x in self.books[y]:
            if w == word:
                return x
        raise KeyError(f"codeword {word!r} not in book {y}")

    def to_json(self) -> list[dict]:
        """One record per (symbol, y): codewords with their send probabilities and the chance of a wrong decode."""
        out = []
        for x, row in enumerate(self.emissions):
            for y, em in enumerate(row):
                wrong = math.fsum(p for w, p in em.words if self.decode(w, y) != x)
                out.append({"symbol": x, "y": y, "codewords": [{"bits": w, "prob": p} for w, p in em.words],
                            "erase_prob": wrong})
        return out


@dataclass(frozen=True)
class CodeReport:
    cgf: float
    cutoff_cgf: float
    error_avg: float
    error_max: float


def shannon_lengths(q: Sequence[float]) -> dict[int, int]:
    """ceil(-log2 Q(x)) for every x with Q(x) > 0."""
    return {x: max(math.ceil(-math.log2(v) - LENGTH_TOL), 0) for x, v in enumerate(q) if v > 0}


def canonical_code(lengths: dict[int, int]) -> dict[int, str]:
    """Canonical prefix code: symbols sorted by (length, id) get consecutive codewords."""
    items = sorted(lengths.items(), key=lambda kv: (kv[1], kv[0]))
    kraft = sum(1 << (max(lengths.values()) - l) for l in lengths.values()) if lengths else 0
    if lengths and kraft > 1 << max(lengths.values()):
        raise ParameterError("lengths violate the Kraft inequality")
    out, code, prev = {}, 0, None
    for x, l in items:
        if prev is not None:
            code = (code + 1) << (l - prev)
        out[x] = format(code, "b").zfill(l) if l else ""
        prev = l
    return out


def is_prefix_free(words: Sequence[str]) -> bool:
    ws = sorted(set(words))
    if len(ws) != len(words):
        return False
    return all(not b.startswith(a) for a, b in zip(ws, ws[1:]))


def kraft_sum(words: Sequence[str]) -> float:
    return math.fsum(2.0 ** -len(w) for w in words)


def _column(j: JointDist, y: int, rho: float, delta: float) -> tuple[list[Emission], tuple, bool]:
    """Emissions and book for one y with per-y error exactly delta (up to the degenerate case)."""
    row = j.row(y)
    p = row.probs
    nx = len(p)
    alpha = 1.0 / (1.0 + rho)
    if delta >= 1.0:
        # every symbol is sent to a codeword decoding to something else
        book = (("0", 0), ("1", 1 if nx > 1 else None))
        ems = [Emission(((("1" if x == 0 else "0"), 1.0),)) for x in range(nx)]
        return ems, book, False
    q, head, star, m = tilted_row(row, alpha, max(delta, 0.0))
    if head:
        words = canonical_code(shannon_lengths(q))
        book = tuple(sorted(((w, x) for x, w in words.items()), key=lambda t: (len(t[0]), t[0])))
        shortest_other = {x: min((w for s, w in words.items() if s != x), key=lambda w: (len(w), w)) for x in words}
        overall = min(words.values(), key=lambda w: (len(w), w))
        ems = []
        keep = min(m / p[star], 1.0)
        for x in range(nx):
            if x in head:
                ems.append(Emission(((words[x], 1.0),)))
            elif x == star:
                pairs = ((words[x], keep),) + (((shortest_other[x], 1.0 - keep),) if keep < 1.0 else ())
                ems.append(Emission(pairs))
            else:
                ems.append(Emission(((overall, 1.0),)))
        return ems, book, False
    # empty head: x* holds at least 1 - delta of the mass
    cost_empty = p[star]
    cost_bit = 2.0 ** rho * m
    if cost_empty < cost_bit:
        book = (("", star),)
        ems = [Emission((("", 1.0),)) for _ in range(nx)]
        return ems, book, False
    # "1" decodes to no symbol, so it is an error for every sender
    book = (("0", star), ("1", None))
    keep = min(m / p[star], 1.0)
    ems = []
    for x in range(nx):
        if x == star:
            pairs = (("0", keep),) + ((("1", 1.0 - keep),) if keep < 1.0 else ())
            ems.append(Emission(pairs))
        else:
            ems.append(Emission((("1", 1.0),)))
    return ems, book, True


def smoothed_shannon_code(j: JointDist, rho: float, delta: DeltaProfile | Sequence[float]) -> Code:
    """Shannon lengths of the tilted conditional, canonical codewords, boundary symbol randomized."""
    rho = check_rho(rho)
    deltas = delta.delta if isinstance(delta, DeltaProfile) else tuple(float(d) for d in delta)
    nx, ny = j.shape
    if len(deltas) != ny:
        raise ParameterError(f"profile has {len(deltas)} entries, expected {ny}")
    cols, books, degen = [], [], []
    for y in range(ny):
        ems, book, flag = _column(j, y, rho, deltas[y])
        if not is_prefix_free([w for w, _ in book]) or kraft_sum([w for w, _ in book]) > 1.0:
            raise AssertionError(f"book {y} is not a prefix code")
        cols.append(ems)
        books.append(book)
        degen.append(flag)
    emissions = tuple(tuple(cols[y][x] for y in range(ny)) for x in range(nx))
    return Code(emissions, tuple(books), tuple(degen))


def code_report(code: Code, j: JointDist, rho: float) -> CodeReport:
    """Exact CGF, cutoff CGF (correct decodes only) and error probabilities, all over the emission coins."""
    rho = check_rho(rho)
    a = j.as_array()
    nx, ny = a.shape
    full = cut = 0.0
    wrong = np.zeros(ny)
    for y in range(ny):
        lookup = dict(code.books[y])
        for x in range(nx):
            if a[x, y] == 0:
                continue
            for w, pr in code.emissions[x][y].words:
                cost = a[x, y] * pr * 2.0 ** (rho * len(w))
                full += cost
                if lookup[w] == x:
                    cut += cost
                else:
                    wrong[y] += a[x, y] * pr
    py = a.sum(axis=0)
    to_bits = lambda v: NEG_INF if v <= 0 else math.log2(v) / rho
    return CodeReport(to_bits(full), to_bits(cut), float(wrong.sum()), float(np.max(wrong / py)))


def shannon_cutoff_cgf(d: Dist | LevelDist, rho: float, delta: float) -> float:
    """Cutoff CGF over rho of the single-source smoothed Shannon code, computed per probability level."""
    rho = check_rho(rho)
    alpha = 1.0 / (1.0 + rho)
    lp, lc, _ = _arrays(d)
    if delta >= 1.0:
        return NEG_INF
    i, taken, m = _head(lp, lc, max(delta, 0.0))
    log_z = _log2_power_sum(lp, lc, max(delta, 0.0), alpha)
    terms = []
    for k in range(i):
        l = max(math.ceil(log_z - alpha * lp[k] - LENGTH_TOL), 0)
        terms.append(lc[k] + lp[k] + rho * l)
    if taken > 0:
        l = max(math.ceil(log_z - alpha * lp[i] - LENGTH_TOL), 0)
        terms.append(math.log2(taken) + lp[i] + rho * l)
    if terms:
        l_star = max(math.ceil(log_z - alpha * math.log2(m) - LENGTH_TOL), 0)
        terms.append(math.log2(m) + rho * l_star)
        return log2sumexp2(terms) / rho
    star = 2.0 ** float(lp[i])
    return math.log2(min(star, 2.0 ** rho * m)) / rho


@dataclass(frozen=True)
class CampbellReport:
    lower: float
    cutoff_cgf: float
    cgf: float
    upper_cutoff: float
    upper_full: float
    error: float
    strict: bool


def _campbell(j: JointDist, rho: float, eps: float, profile: DeltaProfile, entropy: float,
              error_of, label: str) -> CampbellReport:
    code = smoothed_shannon_code(j, rho, profile)
    rep = code_report(code, j, rho)
    # rows erased outright (delta = 1) contribute nothing and do not count against degeneracy
    live = [flag for flag, d in zip(code.degenerate, profile.delta) if d < 1.0]
    degenerate = bool(live) and all(live)
    upper = entropy + 1.0
    if rep.cutoff_cgf >= upper and not (degenerate and rep.cutoff_cgf <= upper + BOUND_SLACK):
        raise BoundViolation(f"{label}: cutoff CGF {rep.cutoff_cgf} not below {upper}")
    err = error_of(rep)
    if err > eps + 1e-12:
        raise BoundViolation(f"{label}: error {err} exceeds {eps}")
    tail = math.log2(1.0 / (1.0 - eps)) / rho
    return CampbellReport(entropy, rep.cutoff_cgf, rep.cgf, upper, upper + tail, err, rep.cutoff_cgf < upper)


def one_shot_campbell_check(j: JointDist, rho: float, eps: float) -> tuple[CampbellReport, CampbellReport]:
    """Achievability codes for both criteria checked against entropy + 1 bit.

    The average criterion uses the optimal per-y budgets; the maximum
    criterion uses the constant budget eps.
    """
    rho = check_rho(rho)
    eps = check_eps(eps)
    alpha = 1.0 / (1.0 + rho)
    if eps == 0.0:
        prof_avg = constant_profile(j, 0.0)
        h_avg = arimoto_conditional(j, alpha)
    else:
        k = kuzuoka_h(j, alpha, eps)
        prof_avg, h_avg = k.profile, k.value
    avg = _campbell(j, rho, eps, prof_avg, h_avg, lambda r: r.error_avg, "average-error code")
    mx = _campbell(j, rho, eps, constant_profile(j, eps), check_h(j, alpha, eps), lambda r: r.error_max,
                   "maximum-error code")
    return avg, mx


def weak_limit_bruteforce(d: Dist, rho: float, eps: float, max_len: int = 5) -> float:
    """Minimum cutoff CGF over Kraft-feasible lengths on subsets, with greedy erasure of the costliest symbols."""
    rho = check_rho(rho)
    eps = check_eps(eps)
    p = list(d.probs)
    xs = [x for x, v in enumerate(p) if v > 0]
    if len(p) > 4 or max_len > 5:
        raise ResourceCapError("brute force supports |X| <= 4 and max_len <= 5")
    best = math.inf
    for r in range(len(xs) + 1):
        for subset in itertools.combinations(xs, r):
            dropped = math.fsum(p[x] for x in xs if x not in subset)
            if dropped > eps + 1e-12:
                continue
            for lengths in itertools.product(range(max_len + 1), repeat=r):
                if math.fsum(2.0 ** -l for l in lengths) > 1.0 + 1e-12:
                    continue
                budget = eps - dropped
                total = 0.0
                for l, x in sorted(zip(lengths, subset), key=lambda t: -t[0]):
                    cost = 2.0 ** (rho * l)
                    erase = min(p[x], max(budget, 0.0))
                    budget -= erase
                    total += (p[x] - erase) * cost
                best = min(best, total)
    return NEG_INF if best <= 0 else math.log2(best) / rho


def ff_limit(d: Dist | LevelDist, eps: float) -> int:
    """Fixed-length limit ceil(log2(1 + |A|)) with A the head set."""
    eps = check_eps(eps)
    return int(smoothing_set(d, eps).head_count).bit_length()
