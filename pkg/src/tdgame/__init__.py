"""Target-defense differential game solver.

Convex target sets, barrier classification, barrier-surface construction,
saddle-point strategies, closed-loop simulation and numerical verification.
"""

from .convex_sets import Ellipsoid, HalfSpace, NormBall, Polytope, Singleton, SmoothLevelSet, TargetSet, target_from_dict
from .errors import GameError
from .game_core import GameConfig, GameState, Region, Termination, apollonius, barrier, check_termination, classify
from .simulator import Scenario, TrajectoryRecord, simulate, straightness_deviation
from .strategies import DirectTo, OptimalAuto, PurePursuit, RandomHeading, attack_plan, capture_plan, policy_step

__version__ = "0.1.0"

__all__ = [
    "DirectTo",
    "Ellipsoid",
    "GameConfig",
    "GameError",
    "GameState",
    "HalfSpace",
    "NormBall",
    "OptimalAuto",
    "Polytope",
    "PurePursuit",
    "RandomHeading",
    "Region",
    "Scenario",
    "Singleton",
    "SmoothLevelSet",
    "TargetSet",
    "Termination",
    "TrajectoryRecord",
    "apollonius",
    "attack_plan",
    "barrier",
    "capture_plan",
    "check_termination",
    "classify",
    "policy_step",
    "simulate",
    "straightness_deviation",
    "target_from_dict",
]
