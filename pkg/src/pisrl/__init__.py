"""Safe exploration via a case-based policy: clone a teacher, then improve it under bounded risk."""

from .behavior_cloning import CaseBasePolicy, CloningAborted, CloningReport, EpisodeStats, clone_behavior, ib1_clone
from .case_base import Case, CaseBase, CaseBaseFormatError, DimensionError, NearestResult, classify_risk, distance, nearest
from .exploration import NoPolicyError, greedy_action, perturb_action
from .mc_valuation import discounted_return, mc_evaluate, returns_to_go
from .parameters import SigmaSchedule, Trajectory, compute_Theta, estimate_eta, estimate_theta, next_sigma
from .policy_improvement import ImprovementConfig, apply_updates, generate_episode, improve, value_unknowns

__version__ = "0.1.0"

__all__ = [
    "Case",
    "CaseBase",
    "CaseBaseFormatError",
    "CaseBasePolicy",
    "CloningAborted",
    "CloningReport",
    "DimensionError",
    "EpisodeStats",
    "ImprovementConfig",
    "NearestResult",
    "NoPolicyError",
    "SigmaSchedule",
    "Trajectory",
    "apply_updates",
    "classify_risk",
    "clone_behavior",
    "compute_Theta",
    "discounted_return",
    "distance",
    "estimate_eta",
    "estimate_theta",
    "generate_episode",
    "greedy_action",
    "ib1_clone",
    "improve",
    "mc_evaluate",
    "nearest",
    "next_sigma",
    "perturb_action",
    "returns_to_go",
    "value_unknowns",
]
