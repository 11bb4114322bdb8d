"""Smooth Renyi entropies, guessing and coding with errors, and task assignment. All logs are base 2."""

from .asymptotics import expansion_ff, expansion_smooth_renyi, residual_sweep
from .coding import code_report, ff_limit, one_shot_campbell_check, smoothed_shannon_code
from .conditional_smooth import check_h, constant_profile, delta_profile, kuzuoka_h, smooth_conditional, tilde_h
from .dist import Dist, JointDist, LevelDist, bes, bses, bss, iid_power, joint_iid_power, load_json, make_dist, make_joint
from .errors import BoundViolation, DistributionError, ParameterError, PreconditionError, ResourceCapError
from .guessing import guess_moment, one_shot_guess_check, optimal_strategy_avg, optimal_strategy_max, simulate
from .measures import arimoto_conditional, cond_stats, h_alpha_mixture, renyi_entropy, shannon_entropy, source_stats
from .smoothing import smooth_renyi, smoothing_set
from .tasks import assignment_avg, assignment_max, bl_partition, one_shot_task_check

__all__ = [
    "arimoto_conditional",
    "assignment_avg",
    "assignment_max",
    "bes",
    "bl_partition",
    "BoundViolation",
    "bses",
    "bss",
    "check_h",
    "code_report",
    "cond_stats",
    "constant_profile",
    "delta_profile",
    "Dist",
    "DistributionError",
    "expansion_ff",
    "expansion_smooth_renyi",
    "ff_limit",
    "guess_moment",
    "h_alpha_mixture",
    "iid_power",
    "joint_iid_power",
    "JointDist",
    "kuzuoka_h",
    "LevelDist",
    "load_json",
    "make_dist",
    "make_joint",
    "one_shot_campbell_check",
    "one_shot_guess_check",
    "one_shot_task_check",
    "optimal_strategy_avg",
    "optimal_strategy_max",
    "ParameterError",
    "PreconditionError",
    "renyi_entropy",
    "residual_sweep",
    "ResourceCapError",
    "shannon_entropy",
    "simulate",
    "smooth_conditional",
    "smooth_renyi",
    "smoothed_shannon_code",
    "smoothing_set",
    "source_stats",
    "tilde_h",
]
