"""Command-line front end: ``smoothrenyi {entropy,guess,code,tasks,sweep,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .asymptotics import _sweep, expansion_smooth_renyi
from .coding import code_report, ff_limit, one_shot_campbell_check, smoothed_shannon_code
from .conditional_smooth import check_h, constant_profile, kuzuoka_h, smooth_conditional, tilde_h
from .dist import DEFAULT_TYPE_CAP, Dist, JointDist, iid_power, joint_iid_power, load_json, make_joint
from .errors import BoundViolation, DistributionError, ParameterError, PreconditionError, ResourceCapError
from .guessing import DEFAULT_RANK_CAP, optimal_strategy_avg, optimal_strategy_max, simulate
from .measures import (arimoto_conditional, cond_stats, h_alpha_mixture, renyi_entropy, source_stats)
from .smoothing import smooth_renyi
from .tasks import assignment_avg, assignment_max, one_shot_task_check
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
EQ_TOL = 1e-9


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    cap_types: int = DEFAULT_TYPE_CAP
    cap_ranks: int = DEFAULT_RANK_CAP
    tolerances: dict = field(default_factory=lambda: {"equality": EQ_TOL})
    output_format: str = "json"

    def __post_init__(self):
        if self.cap_types <= 0 or self.cap_ranks <= 0:
            raise ParameterError("caps must be positive")
        if any(v <= 0 for v in self.tolerances.values()):
            raise ParameterError("tolerances must be positive")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")


class _Usage(Exception):
    pass


def _emit(records: Sequence[dict], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        for rec in records:
            flat = {k: dumps(v) if isinstance(v, dict) else json.dumps(_finite(v)) if isinstance(v, (dict, list)) else v for k, v in rec.items()}
            w.writerow(flat.keys())
            w.writerow(flat.values())
        return
    if fmt == "table":
        for rec in records:
            width = max(len(k) for k in rec)
            for k, v in rec.items():
                out.write(f"{k:<{width}}  {v}\n")
            out.write("\n")
        return
    for rec in records:
        out.write(dumps(rec) + "\n")


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"cannot serialize {type(v)}")


def _finite(v):
    """Non-finite floats become null (nan) or the strings "inf" / "-inf"."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _finite(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_finite(x) for x in v]
    return v


def dumps(rec: dict) -> str:
    """Deterministic strict JSON: sorted keys, no NaN or Infinity literals."""
    return json.dumps(_finite(rec), sort_keys=True, default=_plain, allow_nan=False)


def _load(path: str) -> Dist | JointDist:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc}") from exc
    return load_json(text)


def _as_joint(d: Dist | JointDist) -> JointDist:
    return d if isinstance(d, JointDist) else make_joint([[v] for v in d.probs])


# ---------------------------------------------------------------------------
# subcommands


def cmd_entropy(args, cfg: RunConfig) -> int:
    d = _load(args.file)
    a, e = args.alpha, args.eps
    if isinstance(d, Dist):
        st = source_stats(d)
        rec = {"kind": "source", "unit": "bits", "alpha": a, "eps": e, "H": st.H, "V": st.V, "T": st.T,
               "H_alpha": renyi_entropy(d, a), "H_alpha_eps": smooth_renyi(d, a, e)}
        _emit([rec], cfg.output_format)
        return EXIT_OK
    cs = cond_stats(d)
    h, hm, ha = cs.H_cond, h_alpha_mixture(d, a), arimoto_conditional(d, a)
    rec = {
        "kind": "joint", "unit": "bits", "alpha": a, "eps": e,
        "H_cond": h, "U": cs.U, "V_cond": cs.V_cond,
        "H_mix_alpha": hm, "H_alpha_cond": ha,
        "H_alpha_eps_cond": smooth_conditional(d, a, e),
        "H_check": check_h(d, a, e),
        "H_tilde": tilde_h(d, a, e) if e > 0 else None,
        "chain": {
            "H_cond_vs_H_mix": "=" if abs(hm - h) <= cfg.tolerances["equality"] else "<",
            "H_mix_vs_H_alpha_cond": "=" if abs(ha - hm) <= cfg.tolerances["equality"] else "<",
        },
    }
    _emit([rec], cfg.output_format)
    return EXIT_OK


def cmd_guess(args, cfg: RunConfig) -> int:
    j = _as_joint(_load(args.file))
    rho, eps = args.rho, args.eps
    src = j if args.n == 1 else joint_iid_power(j, args.n, cfg.cap_types)
    make = optimal_strategy_avg if args.criterion == "avg" else optimal_strategy_max
    strat, lim = make(src, eps, rho, cfg.cap_ranks)
    rec = {"criterion": args.criterion, "unit": "bits", "n": args.n, "rho": rho, "eps": eps,
           "J": lim.J, "xi": lim.xi, "moment": lim.moment.value, "moment_bits": lim.moment.log_scaled,
           "error_avg": lim.error_avg, "error_max": lim.error_max}
    records = [rec]
    if args.trials:
        if args.n != 1:
            raise _Usage("simulation runs on the single-letter source only (--n 1)")
        records.append({"simulation": simulate(strat, j, rho, args.trials, cfg.seed).to_json(),
                        "seed": cfg.seed, "trials": args.trials})
    _emit(records, cfg.output_format)
    return EXIT_OK


def cmd_code(args, cfg: RunConfig) -> int:
    j = _as_joint(_load(args.file))
    rho, eps = args.rho, args.eps
    avg, mx = one_shot_campbell_check(j, rho, eps)
    if args.criterion == "avg":
        prof = kuzuoka_h(j, 1.0 / (1.0 + rho), eps).profile if eps > 0 else constant_profile(j, 0.0)
        rep_c = avg
    else:
        prof = constant_profile(j, eps)
        rep_c = mx
    code = smoothed_shannon_code(j, rho, prof)
    rep = code_report(code, j, rho)
    records = [{"criterion": args.criterion, "unit": "bits", "rho": rho, "eps": eps,
                "cgf": rep.cgf, "cutoff_cgf": rep.cutoff_cgf, "error_avg": rep.error_avg,
                "error_max": rep.error_max, "entropy": rep_c.lower, "entropy_plus_one": rep_c.upper_cutoff,
                "strict": rep_c.strict}]
    records += [{"code": r} for r in code.to_json()]
    if j.shape[1] == 1:
        records.append({"ff_limit": ff_limit(j.row(0), eps), "unit": "bits"})
    _emit(records, cfg.output_format)
    return EXIT_OK


def cmd_tasks(args, cfg: RunConfig) -> int:
    j = _as_joint(_load(args.file))
    rho, eps, M = args.rho, args.eps, args.cells
    rep = one_shot_task_check(j, rho, eps, M)
    a = assignment_avg(j, rho, eps, M) if args.criterion == "avg" else assignment_max(j, rho, eps, M)
    records = [rep.to_json() | {"criterion": args.criterion}]
    records += [{"assignment": r} for r in a.to_json()]
    _emit(records, cfg.output_format)
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    d = _load(args.file)
    if not isinstance(d, Dist):
        raise _Usage("sweep needs a single-source distribution")
    if args.n_max < args.n:
        raise _Usage("--n-max must be at least --n")
    e = expansion_smooth_renyi(source_stats(d), args.alpha, args.eps)
    exact: dict[int, float] = {}
    status = EXIT_OK
    for n in range(args.n, args.n_max + 1, args.step):
        try:
            exact[n] = smooth_renyi(iid_power(d, n, cfg.cap_types), args.alpha, args.eps)
        except ResourceCapError:
            status = EXIT_CAP
            break
    sweep = _sweep(exact, exact.__getitem__, e.predict) if exact else None
    done = list(exact)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if sweep is not None:
            sweep.to_csv(out)
    finally:
        if args.out:
            out.close()
    summary = {"unit": "bits", "expansion": e.kind, "points": len(done), "partial": status == EXIT_CAP,
               "logn_slope": sweep.logn_slope if sweep else math.nan,
               "full_grid_slope": sweep.full_slope if sweep else math.nan}
    if len(done) < 2:
        summary["warning"] = "fewer than two points: fit undefined"
    sys.stderr.write(dumps(summary) + "\n")
    return status


def cmd_verify(args, cfg: RunConfig) -> int:
    if args.suite not in SUITES:
        sys.stderr.write(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}\n")
        return EXIT_USAGE
    checks = run_suite(args.suite, quick=args.quick, emit=lambda line: print(line, flush=True))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothrenyi", description="Smooth Renyi entropy toolkit (all values in bits).")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "table", "csv"), default="json")
    p.add_argument("--cap-types", type=int, default=DEFAULT_TYPE_CAP)
    p.add_argument("--cap-ranks", type=int, default=DEFAULT_RANK_CAP)
    # the same flags are accepted after the subcommand; SUPPRESS keeps the top-level value when absent
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "table", "csv"), default=argparse.SUPPRESS)
    common.add_argument("--cap-types", type=int, default=argparse.SUPPRESS)
    common.add_argument("--cap-ranks", type=int, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("entropy", parents=[common], help="information measures of a distribution file")
    s.add_argument("file")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--eps", type=float, default=0.0)
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("guess", parents=[common], help="optimal guessing with giving up")
    s.add_argument("file")
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--criterion", choices=("avg", "max"), default="avg")
    s.add_argument("--trials", type=int, default=0)
    s.set_defaults(func=cmd_guess)

    s = sub.add_parser("code", parents=[common], help="smoothed Shannon code and its CGF report")
    s.add_argument("file")
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--criterion", choices=("avg", "max"), default="avg")
    s.set_defaults(func=cmd_code)

    s = sub.add_parser("tasks", parents=[common], help="task assignment with M cells")
    s.add_argument("file")
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--cells", type=int, required=True, help="number of labels M")
    s.add_argument("--criterion", choices=("avg", "max"), default="avg")
    s.set_defaults(func=cmd_tasks)

    s = sub.add_parser("sweep", parents=[common], help="exact vs expansion over a range of blocklengths (CSV)")
    s.add_argument("file")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--n-max", type=int, default=400)
    s.add_argument("--step", type=int, default=20)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("suite")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(seed=args.seed, cap_types=args.cap_types, cap_ranks=args.cap_ranks, output_format=args.format)
        return args.func(args, cfg)
    except (_Usage, DistributionError, ParameterError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ResourceCapError as exc:
        sys.stderr.write(f"resource cap: {exc}\n")
        return EXIT_CAP
    except (BoundViolation, AssertionError) as exc:
        sys.stderr.write(f"assertion failed: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
