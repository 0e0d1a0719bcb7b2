"""Game configuration, Apollonius safe region, barrier function and winning
region classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .convex_sets import TargetSet, as_point
from .errors import DimensionError, ValidationError

TAU_B = 1e-9


class Region(enum.Enum):
    CAPTURE = "CaptureRegion"
    ATTACK = "AttackRegion"
    ON_BARRIER = "OnBarrier"


class Termination(enum.Enum):
    RUNNING = "Running"
    CAPTURED = "Captured"
    ATTACKED = "Attacked"


@dataclass(frozen=True)
class GameConfig:
    """Speed ratio ``gamma = v_E / v_P`` with 0 < gamma < 1.

    ``v_E`` defaults to ``gamma * v_P``; if given it must agree to 1e-12.
    """

    gamma: float
    dim: int
    v_P: float = 1.0
    v_E: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError("gamma must lie in (0,1)")
        if not self.v_P > 0.0:
            raise ValidationError("v_P must be positive")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError("dimension must be a positive integer")
        v_E = self.gamma * self.v_P if self.v_E is None else float(self.v_E)
        if abs(v_E - self.gamma * self.v_P) > 1e-12:
            raise ValidationError("v_E must equal gamma * v_P")
        object.__setattr__(self, "v_E", v_E)
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True, eq=False)
class GameState:
    x_P: np.ndarray
    x_E: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x_P, x_E = as_point(self.x_P), as_point(self.x_E)
        if x_P.shape != x_E.shape:
            raise DimensionError("x_P and x_E have different dimensions")
        object.__setattr__(self, "x_P", x_P)
        object.__setattr__(self, "x_E", x_E)
        object.__setattr__(self, "t", float(self.t))

    @property
    def vector(self) -> np.ndarray:
        """The stacked 2n-dimensional state (x_P, x_E)."""
        return np.concatenate([self.x_P, self.x_E])

    @classmethod
    def from_vector(cls, x, t: float = 0.0) -> "GameState":
        x = np.asarray(x, dtype=float)
        n = x.shape[0] // 2
        return cls(x[:n], x[n:], t)


@dataclass(frozen=True, eq=False)
class ApolloniusRegion:
    alpha: np.ndarray
    beta: float

    def contains(self, z, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(z) - self.alpha) <= self.beta + tol)


@dataclass(frozen=True, eq=False)
class BarrierResult:
    value: float
    region: Region
    projection_point: np.ndarray
    apollonius: ApolloniusRegion


def _check_dims(cfg: GameConfig, s: GameState):
    if s.x_P.shape[0] != cfg.dim:
        raise DimensionError(f"state dimension {s.x_P.shape[0]} does not match config dimension {cfg.dim}")


def apollonius(cfg: GameConfig, s: GameState) -> ApolloniusRegion:
    """Center and radius of the evader's safe region."""
    _check_dims(cfg, s)
    g2 = cfg.gamma**2
    alpha = (s.x_E - g2 * s.x_P) / (1.0 - g2)
    beta = cfg.gamma * float(np.linalg.norm(s.x_E - s.x_P)) / (1.0 - g2)
    return ApolloniusRegion(alpha, beta)


def classify(value: float, tol: float = TAU_B) -> Region:
    if value > tol:
        return Region.CAPTURE
    if value < -tol:
        return Region.ATTACK
    return Region.ON_BARRIER


def barrier(cfg: GameConfig, s: GameState, target: TargetSet) -> BarrierResult:
    """Signed barrier value ||alpha - proj(alpha)|| - beta and its region.

    Positive values mean the target and the open safe region are disjoint
    (the defender wins); negative values mean they intersect.
    """
    ap = apollonius(cfg, s)
    if target.dim != cfg.dim:
        raise DimensionError("target and game dimensions differ")
    proj = target.project(ap.alpha)
    value = float(np.linalg.norm(ap.alpha - proj)) - ap.beta
    return BarrierResult(value, classify(value), proj, ap)


def check_termination(cfg: GameConfig, s: GameState, target: TargetSet, capture_radius: float) -> Termination:
    if capture_radius < 0.0:
        raise ValidationError("capture radius must be nonnegative")
    _check_dims(cfg, s)
    if np.linalg.norm(s.x_P - s.x_E) <= capture_radius:
        return Termination.CAPTURED
    if target.contains(s.x_E):
        return Termination.ATTACKED
    return Termination.RUNNING
