"""Verification suites behind ``smoothrenyi verify``; one function per acceptance criterion."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .asymptotics import clt_mgf_sweep, fit_line, model_sweep, residual_sweep
from .coding import ff_limit, one_shot_campbell_check, shannon_cutoff_cgf, weak_limit_bruteforce
from .conditional_smooth import (check_h, kuzuoka_h, kuzuoka_h_dp_grid, kuzuoka_h_joint_grid, tilde_h)
from .dist import JointDist, bes, bss, bses, information_density, iid_power, joint_iid_power, make_dist, make_joint
from .errors import BoundViolation
from .guessing import (bruteforce_guess, conditional_errors, one_shot_guess_check, optimal_strategy_avg,
                       optimal_strategy_max)
from .measures import arimoto_conditional, conditional_entropy, h_alpha_mixture, shannon_entropy
from .smoothing import smooth_renyi, smooth_renyi_bruteforce
from .tasks import (assignment_avg, assignment_max, avg_threshold, max_threshold, one_shot_task_check,
                    task_error, task_errors)

KOGA_CORPUS: tuple[tuple[float, ...], ...] = (
    (1.0,),
    (0.5, 0.5),
    (0.3, 0.7),
    (0.9, 0.1),
    (0.5, 0.3, 0.2),
    (1 / 3, 1 / 3, 1 / 3),
    (0.6, 0.25, 0.15),
    (0.25, 0.25, 0.25, 0.25),
    (0.4, 0.3, 0.2, 0.1),
    (0.7, 0.1, 0.1, 0.1),
    (0.5, 0.25, 0.125, 0.125),
    (0.35, 0.35, 0.2, 0.1),
)

KUZUOKA_JOINTS: tuple[tuple[str, tuple[tuple[float, ...], ...]], ...] = (
    ("2x2", ((0.4, 0.1), (0.15, 0.35))),
    ("3x2", ((0.3, 0.1), (0.2, 0.05), (0.05, 0.3))),
)
KUZUOKA_PAIRS = ((0.5, 0.2), (0.3, 0.1), (0.8, 0.4))

GRID_RHO = (0.5, 1.0, 2.0)
GRID_EPS = (0.1, 0.2, 0.4)
BRUTE_SOURCES = ((0.5, 0.3, 0.2), (0.6, 0.3, 0.1), (0.4, 0.35, 0.25), (0.8, 0.15, 0.05))

BUDGET_SECONDS = {1: 30, 2: 60, 3: 60, 4: 60, 5: 120, 6: 180, 7: 120, 8: 120, 9: 5, 10: 60}


def grid_sources() -> list[tuple[str, JointDist]]:
    """The five sources shared by the guessing, coding and task grids."""
    return [
        ("bss(0.1)", bss(0.1)),
        ("bes(0.2)", bes(0.2)),
        ("bses(0.1,0.2)", bses(0.1, 0.2)),
        ("3x2", make_joint([[0.3, 0.1], [0.2, 0.05], [0.05, 0.3]])),
        ("single-y", make_joint([[0.5], [0.3], [0.2]])),
    ]


@dataclass(frozen=True)
class Check:
    suite: str
    criterion: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        body = {"suite": self.suite, "criterion": self.criterion, "check": self.name, "pass": self.passed,
                "unit": "bits"}
        body.update(self.detail)
        return json.dumps(body, sort_keys=True, default=_jsonable)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    raise TypeError(f"cannot serialize {type(v)}")


def _n_grid(quick: bool) -> list[int]:
    return list(range(20, 401, 20)) if quick else list(range(20, 401))


def _slope(x, y) -> float:
    """Least-squares log2 n slope on the second half of the grid."""
    h = len(x) // 2
    return fit_line(np.log2(x[h:]), y[h:]).slope


# ---------------------------------------------------------------------------
# criteria


def criterion_1(quick: bool = False) -> list[Check]:
    out = []
    step = 0.01 if quick else 0.005
    for p in KOGA_CORPUS:
        d = make_dist(p)
        worst_hi, worst_lo = -math.inf, -math.inf
        for eps in (0.1, 0.3, 0.6):
            for alpha in (0.3, 0.5, 0.8):
                v = smooth_renyi(d, alpha, eps)
                b = smooth_renyi_bruteforce(d, alpha, eps, step)
                worst_hi = max(worst_hi, v - b)
                worst_lo = max(worst_lo, b - v)
        ok = worst_hi <= 1e-9 and worst_lo <= 0.02
        out.append(Check("koga", 1, f"dist {list(p)}", ok,
                         {"max_excess_over_grid": worst_hi, "max_grid_gap": worst_lo, "grid_step": step}))
    return out


def criterion_2(quick: bool = False) -> list[Check]:
    out = []
    for name, m in KUZUOKA_JOINTS:
        j = make_joint(m)
        for alpha, eps in KUZUOKA_PAIRS:
            k = kuzuoka_h(j, alpha, eps).value
            dp = kuzuoka_h_dp_grid(j, alpha, eps)
            jg = kuzuoka_h_joint_grid(j, alpha, eps, step=0.02 if quick else 0.01)
            ch = check_h(j, alpha, eps)
            ok = abs(k - dp) <= 0.02 and jg >= k - 1e-9 and k <= ch + 1e-9
            out.append(Check("kuzuoka", 2, f"{name} alpha={alpha} eps={eps}", ok,
                             {"kuzuoka": k, "dp_grid": dp, "joint_grid": jg, "check_h": ch}))
    return out


def criterion_3(quick: bool = False) -> list[Check]:
    d = make_dist([0.3, 0.7])
    alpha = 0.5
    ns = _n_grid(quick)
    out = []
    target = -1.0 / (2.0 * (1.0 - alpha))
    for eps in (0.1, 0.5, 0.9):
        full = residual_sweep(d, alpha, eps, ns)
        ablated = residual_sweep(d, alpha, eps, ns, third_term=False)
        model = model_sweep(d, alpha, eps, ns)
        out.append(Check("clt", 3, f"third-order slope eps={eps}", abs(full.logn_slope) <= 0.1,
                         {"logn_slope": full.logn_slope, "full_grid_slope": full.full_slope}))
        out.append(Check("clt", 3, f"ablation slope eps={eps}", abs(ablated.logn_slope - target) <= 0.1,
                         {"logn_slope": ablated.logn_slope, "target": target}))
        out.append(Check("clt", 3, f"gaussian-model slope eps={eps}", abs(model.logn_slope) <= 0.1,
                         {"logn_slope": model.logn_slope, "diagnostic": True}))
    return out


def criterion_4(quick: bool = False) -> list[Check]:
    d = make_dist([0.3, 0.7])
    s = 0.5
    ns = _n_grid(quick)
    sweep = clt_mgf_sweep(information_density(d), s, 0.1, ns)
    model = model_sweep(d, 1.0 - s, 0.1, ns)
    return [
        Check("cutoff", 4, "lemma slope eps=0.1", abs(sweep.logn_slope) <= 0.1,
              {"logn_slope": sweep.logn_slope, "full_grid_slope": sweep.full_slope}),
        Check("cutoff", 4, "gaussian-model slope eps=0.1", abs(model.logn_slope) <= 0.1,
              {"logn_slope": model.logn_slope, "diagnostic": True}),
    ]


def criterion_5(quick: bool = False) -> list[Check]:
    out = []
    for name, j in grid_sources():
        worst = 0.0
        ok = True
        for rho in GRID_RHO:
            for eps in GRID_EPS:
                sa, la = optimal_strategy_avg(j, eps, rho)
                sm, lm = optimal_strategy_max(j, eps, rho)
                per_y = conditional_errors(sm, j)
                worst = max(worst, abs(la.error_avg - eps), max(abs(e - eps) for e in per_y))
                try:
                    one_shot_guess_check(j, rho, eps)
                except BoundViolation:
                    ok = False
        out.append(Check("guess", 5, f"{name} exact errors and sandwiches", ok and worst <= 1e-12,
                         {"max_error_deviation": worst}))
    sources = BRUTE_SOURCES[:2] if quick else BRUTE_SOURCES
    for p in sources:
        d = make_dist(p)
        j = make_joint([[v] for v in p])
        gap = -math.inf
        for rho in GRID_RHO:
            for eps in GRID_EPS:
                opt = optimal_strategy_avg(j, eps, rho)[1].moment.log_scaled
                brute, _ = bruteforce_guess(d, rho, eps, 0.02 if quick else 0.01)
                gap = max(gap, opt - brute)
        out.append(Check("guess", 5, f"brute force {list(p)}", gap <= 0.05, {"max_brute_advantage": gap}))
    return out


def criterion_6(quick: bool = False) -> list[Check]:
    """First-order convergence of exact n-fold guessing moments.

    The fitted constant C is sqrt(n) |deviation| at the smallest n; every
    larger n must stay within C / sqrt(n).
    """
    rho, eps = 1.0, 0.2
    alpha = 1.0 / (1.0 + rho)
    ns = (5, 10, 20) if quick else (5, 10, 20, 40)
    out = []
    for name, j in (("bss(0.1)", bss(0.1)), ("bes(0.2)", bes(0.2))):
        h = conditional_entropy(j)
        h_mix = h_alpha_mixture(j, alpha)
        sup_h = max(shannon_entropy(j.row(y)) for y in range(j.shape[1]))
        dev_avg, dev_max, bracket_ok = [], [], True
        rows = []
        for n in ns:
            tf = joint_iid_power(j, n)
            g_avg = optimal_strategy_avg(tf, eps, rho)[1].moment.log_scaled
            g_max = optimal_strategy_max(tf, eps, rho)[1].moment.log_scaled
            h_t = tilde_h(tf, alpha, eps)
            h_c = check_h(tf, alpha, eps)
            lo_avg = h_t - 2.0 * math.log2(1.0 + n * h / eps)
            lo_max = h_c - math.log2(1.0 + n * sup_h / eps)
            bracket_ok &= lo_avg - 1e-9 <= g_avg <= h_t + 1e-9 and lo_max - 1e-9 <= g_max <= h_c + 1e-9
            dev_avg.append(abs(g_avg / n - h))
            dev_max.append(abs(h_c / n - h_mix))
            rows.append({"n": n, "avg_rate": g_avg / n, "check_rate": h_c / n})
        c_avg = math.sqrt(ns[0]) * dev_avg[0]
        c_max = math.sqrt(ns[0]) * dev_max[0]
        conv_avg = all(math.sqrt(n) * dv <= c_avg + 1e-12 for n, dv in zip(ns, dev_avg))
        conv_max = all(math.sqrt(n) * dv <= c_max + 1e-12 for n, dv in zip(ns, dev_max))
        out.append(Check("guess", 6, f"{name} avg rate -> H(X|Y)", conv_avg and bracket_ok,
                         {"C": c_avg, "target": h, "bracket": bracket_ok, "rates": rows}))
        out.append(Check("guess", 6, f"{name} check-H rate -> H^(alpha)(X|Y)", conv_max and bracket_ok,
                         {"C": c_max, "target": h_mix}))
    return out


def criterion_7(quick: bool = False) -> list[Check]:
    out = []
    for name, j in grid_sources():
        ok, detail = True, {}
        for rho in GRID_RHO:
            for eps in GRID_EPS:
                try:
                    avg, mx = one_shot_campbell_check(j, rho, eps)
                except BoundViolation as exc:
                    ok, detail = False, {"violation": str(exc)}
                    break
                if not (avg.strict or mx.strict):
                    detail.setdefault("equality_cases", []).append([rho, eps])
        out.append(Check("campbell", 7, f"{name} codes below entropy + 1", ok, detail))
    for p in BRUTE_SOURCES[:3]:
        d = make_dist(p)
        ok, worst = True, {}
        for rho in GRID_RHO:
            for eps in GRID_EPS:
                h = smooth_renyi(d, 1.0 / (1.0 + rho), eps)
                lam = weak_limit_bruteforce(d, rho, eps)
                if not h - 1e-9 <= lam <= h + 1.0 + 1e-9:
                    ok, worst = False, {"rho": rho, "eps": eps, "H": h, "oracle": lam}
        out.append(Check("campbell", 7, f"weak-limit oracle {list(p)}", ok, worst))
    return out


def random_joint(rng: np.random.Generator) -> JointDist:
    nx, ny = int(rng.integers(2, 6)), int(rng.integers(1, 4))
    m = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    return make_joint(m.tolist())


def criterion_8(quick: bool = False, seed: int = 20240601) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    trials = 30 if quick else 100
    worst = 0.0
    for _ in range(trials):
        j = random_joint(rng)
        rho = float(rng.choice(GRID_RHO))
        eps = float(rng.uniform(0.05, 0.5))
        thr = max(avg_threshold(j, eps), max_threshold(j, eps))
        M = int(rng.integers(math.floor(thr) + 1, math.ceil(4 * thr) + 1))
        a_avg = assignment_avg(j, rho, eps, M)
        a_max = assignment_max(j, rho, eps, M)
        worst = max(worst, abs(task_error(a_avg, j) - eps), max(abs(e - eps) for e in task_errors(a_max, j)))
    out.append(Check("tasks", 8, f"{trials} random assignments", worst <= 1e-12, {"max_error_deviation": worst}))
    for name, j in grid_sources():
        ok, detail = True, {}
        for rho in GRID_RHO:
            for eps in GRID_EPS:
                thr = max(avg_threshold(j, eps), max_threshold(j, eps))
                for M in (math.floor(thr) + 1, math.ceil(4 * thr)):
                    try:
                        one_shot_task_check(j, rho, eps, M)
                    except BoundViolation as exc:
                        ok, detail = False, {"violation": str(exc)}
        out.append(Check("tasks", 8, f"{name} task bounds", ok, detail))
    return out


def criterion_9(quick: bool = False) -> list[Check]:
    out = []
    cases = (("bss(0.1)", bss(0.1), "==<"), ("bes(0.2)", bes(0.2), "<=="), ("bses(0.1,0.2)", bses(0.1, 0.2), "<<"))
    for name, j, shape in cases:
        for alpha in (0.3, 0.5, 0.8):
            h = conditional_entropy(j)
            hm = h_alpha_mixture(j, alpha)
            ha = arimoto_conditional(j, alpha)
            g1, g2 = hm - h, ha - hm
            if shape == "==<":
                ok = abs(g1) <= 1e-9 and g2 >= 1e-6
            elif shape == "<==":
                ok = g1 >= 1e-6 and abs(g2) <= 1e-9
            else:
                ok = g1 >= 1e-6 and g2 >= 1e-6
            out.append(Check("orderings", 9, f"{name} alpha={alpha}", ok,
                             {"H": h, "H_mix": hm, "H_arimoto": ha}))
    return out


def ff_gap(n: int, eps: float = 0.1, rho: float = 1.0) -> float:
    x = iid_power(make_dist([0.3, 0.7]), n)
    return ff_limit(x, eps) - shannon_cutoff_cgf(x, rho, eps)


def criterion_10(quick: bool = False) -> list[Check]:
    # always the dense grid: the fixed-length limit moves in integer steps, and a coarse
    # grid aliases with them; the dense sweep is cheap anyway
    ns = _n_grid(False)
    gaps = [ff_gap(n) for n in ns]
    slope = _slope(ns, gaps)
    return [Check("campbell", 10, "ff minus vl log n slope", abs(slope - 0.5) <= 0.15,
                  {"logn_slope": slope, "target": 0.5, "full_grid_slope": fit_line(np.log2(ns), gaps).slope})]


CRITERIA: dict[int, Callable[..., list[Check]]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}

SUITES: dict[str, tuple[int, ...]] = {
    "koga": (1,),
    "kuzuoka": (2,),
    "clt": (3,),
    "cutoff": (4,),
    "guess": (5, 6),
    "campbell": (7, 10),
    "tasks": (8,),
    "orderings": (9,),
}
SUITES["all"] = tuple(range(1, 11))


def run_criterion(k: int, quick: bool = False) -> tuple[list[Check], float]:
    """Run one criterion; a runtime check against its budget is appended."""
    start = time.perf_counter()
    checks = CRITERIA[k](quick)
    elapsed = time.perf_counter() - start
    suite = checks[0].suite if checks else "?"
    checks.append(Check(suite, k, "runtime", elapsed <= BUDGET_SECONDS[k],
                        {"seconds": round(elapsed, 3), "budget_seconds": BUDGET_SECONDS[k]}))
    return checks, elapsed


def run_suite(name: str, quick: bool = False, emit: Callable[[str], None] | None = None) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    out = []
    for k in SUITES[name]:
        checks, _ = run_criterion(k, quick)
        for c in checks:
            if emit is not None:
                emit(c.to_json())
        out.extend(checks)
    return out
