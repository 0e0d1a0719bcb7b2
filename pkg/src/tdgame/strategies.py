"""Saddle-point feedback strategies for the capture and attack subgames and
the heuristic policies used as suboptimal opponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .convex_sets import TargetSet, as_point
from .errors import DegenerateError, RegionError, SolverError, ValidationError
from .game_core import BarrierResult, GameConfig, GameState, Region, barrier

PG_MAX_ITER = 10_000
N_RANDOM_STARTS = 8
FEAS_TOL = 1e-9
STATIONARITY_TOL = 1e-6


def _unit(v: np.ndarray, what: str) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateError(f"{what} is undefined (zero-length vector)")
    u = v / norm
    return u / np.linalg.norm(u)


@dataclass(frozen=True, eq=False)
class CapturePlan:
    x_star: np.ndarray
    value: float
    dir_P: np.ndarray
    dir_E: np.ndarray


@dataclass(frozen=True, eq=False)
class AttackPlan:
    """Optimal attack point and the attack-game value.

    ``value`` is the terminal defender-attacker distance under optimal play,
    ||x_dagger - x_P|| - ||x_dagger - x_E|| / gamma (nonnegative), and
    ``phi`` is the minimized objective, phi = -value.  ``dir_E`` is the zero
    vector when the attacker already stands on the attack point.
    """

    x_dagger: np.ndarray
    value: float
    phi: float
    dir_P: np.ndarray
    dir_E: np.ndarray
    local_minima: Tuple[Tuple[float, ...], ...] = field(default=())


# ---------------------------------------------------------------------------
# capture game
# ---------------------------------------------------------------------------


def capture_plan(cfg: GameConfig, s: GameState, target: TargetSet, br: Optional[BarrierResult] = None) -> CapturePlan:
    """Optimal capture point and headings; valid in the capture region and
    on the barrier."""
    br = br or barrier(cfg, s, target)
    if br.region is Region.ATTACK:
        raise RegionError("capture plan requested in the attack region")
    ap = br.apollonius
    g = ap.alpha - br.projection_point
    g_hat = _unit(g, "direction from the target to the Apollonius center")
    x_star = ap.alpha - ap.beta * g_hat
    return CapturePlan(
        x_star=x_star,
        value=br.value,
        dir_P=_unit(x_star - s.x_P, "defender heading"),
        dir_E=_unit(x_star - s.x_E, "attacker heading"),
    )


def capture_value_gradient(cfg: GameConfig, s: GameState, target: TargetSet) -> np.ndarray:
    """Gradient of the capture value with respect to the stacked state (x_P, x_E)."""
    br = barrier(cfg, s, target)
    if br.region is not Region.CAPTURE:
        raise RegionError("capture value gradient requested outside the capture region")
    g_hat = _unit(br.apollonius.alpha - br.projection_point, "projection residual")
    e_hat = _unit(s.x_E - s.x_P, "relative position")
    gam = cfg.gamma
    k = 1.0 / (1.0 - gam**2)
    return np.concatenate([k * (-gam**2 * g_hat + gam * e_hat), k * (g_hat - gam * e_hat)])


# ---------------------------------------------------------------------------
# attack game
# ---------------------------------------------------------------------------


def phi(cfg: GameConfig, s: GameState, z) -> np.ndarray:
    """-||z - x_P|| + ||z - x_E|| / gamma, row-wise for 2-D input."""
    Z = np.asarray(z, dtype=float)
    return -np.linalg.norm(Z - s.x_P, axis=-1) + np.linalg.norm(Z - s.x_E, axis=-1) / cfg.gamma


def _phi_grad(cfg: GameConfig, s: GameState, Z: np.ndarray) -> np.ndarray:
    dE = Z - s.x_E
    dP = Z - s.x_P
    nE = np.linalg.norm(dE, axis=1, keepdims=True)
    nP = np.linalg.norm(dP, axis=1, keepdims=True)
    gE = np.divide(dE, nE, out=np.zeros_like(dE), where=nE > 0)
    gP = np.divide(dP, nP, out=np.zeros_like(dP), where=nP > 0)
    return gE / cfg.gamma - gP


def _pull_into_ball(q0: np.ndarray, Z: np.ndarray, alpha: np.ndarray, beta: float) -> np.ndarray:
    """Move each row of Z toward q0 (a point of the ball) just far enough to
    enter the closed ball; the segment stays inside any convex set holding
    both endpoints."""
    out = Z.copy()
    for i, z in enumerate(Z):
        d = z - q0
        if np.linalg.norm(z - alpha) <= beta:
            continue
        # largest lam in [0, 1] with |q0 + lam d - alpha| <= beta
        w = q0 - alpha
        a, b, c = d @ d, 2.0 * (w @ d), w @ w - beta * beta
        disc = max(b * b - 4.0 * a * c, 0.0)
        lam = (-b + math.sqrt(disc)) / (2.0 * a) if a > 0.0 else 0.0
        out[i] = q0 + min(max(lam, 0.0), 1.0) * d
    return out


def _descend(cfg, s, target, Z, alpha, beta, tol):
    """Batched projected-gradient descent of phi over the target, Armijo
    backtracking along the projection arc and Barzilai-Borwein trial steps.
    Iterates never leave the Apollonius ball because phi > 0 outside it."""
    k = len(Z)
    f = phi(cfg, s, Z)
    G = _phi_grad(cfg, s, Z)
    t = np.full(k, max(beta, 1e-12) * cfg.gamma)
    active = np.ones(k, dtype=bool)
    scale = 1.0 + beta + float(np.linalg.norm(alpha))
    for _ in range(PG_MAX_ITER):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            return Z, f
        pending = idx
        trial = np.empty((len(idx), Z.shape[1]))
        f_trial = np.empty(len(idx))
        slot = {j: m for m, j in enumerate(idx)}
        for _bt in range(80):
            P = target.project_many(Z[pending] - t[pending, None] * G[pending])
            fp = phi(cfg, s, P)
            step = P - Z[pending]
            inside = np.linalg.norm(P - alpha, axis=1) <= beta * (1.0 + 1e-12) + 1e-15
            ok = (fp <= f[pending] + 1e-4 * np.sum(G[pending] * step, axis=1) + 1e-15 * scale) & inside
            rows = np.array([slot[j] for j in pending])
            trial[rows[ok]] = P[ok]
            f_trial[rows[ok]] = fp[ok]
            pending = pending[~ok]
            if len(pending) == 0:
                break
            t[pending] *= 0.5
        else:
            # step size underflow: treat the current iterate as converged
            rows = np.array([slot[j] for j in pending])
            trial[rows] = Z[pending]
            f_trial[rows] = f[pending]
        step = trial - Z[idx]
        t_used = t[idx].copy()
        G_new = _phi_grad(cfg, s, trial)
        sy = np.sum(step * (G_new - G[idx]), axis=1)
        ss = np.sum(step * step, axis=1)
        t_bb = np.where(sy > 0.0, ss / np.where(sy > 0.0, sy, 1.0), 2.0 * t[idx])
        t[idx] = np.clip(t_bb, 1e-14, 1e3)
        Z[idx], f[idx], G[idx] = trial, f_trial, G_new
        # small move and small gradient mapping (move / step size)
        done = (np.sqrt(ss) <= tol * scale) & (np.sqrt(ss) <= 1e-9 * t_used)
        active[idx[done]] = False
    raise SolverError("attack-point descent hit the iteration cap", float(np.max(np.sqrt(ss))))


def _stationarity(cfg, s, target, z, beta) -> float:
    h = 1e-2 * max(beta, 1e-9)
    g = _phi_grad(cfg, s, z[None, :])[0]
    return float(np.linalg.norm(z - target.project(z - h * g)) / h)


def attack_plan(
    cfg: GameConfig,
    s: GameState,
    target: TargetSet,
    seed: int = 0,
    n_random_starts: int = N_RANDOM_STARTS,
    br: Optional[BarrierResult] = None,
    tol: float = 1e-13,
    warm_starts=(),
    default_starts: bool = True,
) -> AttackPlan:
    """Optimal attack point: minimize phi over cl(A) intersected with the target.

    Multi-started from proj(alpha), proj(x_E), any ``warm_starts`` (e.g. the
    previous attack point along a trajectory) and ``n_random_starts``
    random feasible seeds; the lowest objective wins, ties going to the
    lexicographically smallest point. ``default_starts=False`` drops the two
    projection starts (only valid together with warm or random starts).
    """
    br = br or barrier(cfg, s, target)
    if br.region is Region.CAPTURE:
        raise RegionError("attack plan requested in the capture region")
    ap = br.apollonius
    alpha, beta = ap.alpha, ap.beta

    if target.contains(s.x_E):
        x_dag = s.x_E.copy()
        f = float(phi(cfg, s, x_dag))
        return AttackPlan(x_dag, -f, f, _unit(x_dag - s.x_P, "defender heading"), np.zeros(cfg.dim), ((f,),))

    q0 = br.projection_point
    if np.linalg.norm(q0 - alpha) > beta * (1.0 + 1e-9) + FEAS_TOL:
        raise SolverError("barrier sign and feasibility disagree: empty attack set", float(np.linalg.norm(q0 - alpha) - beta))
    starts = [q0, target.project(s.x_E)] if default_starts else []
    starts.extend(target.project(w) for w in warm_starts)
    if n_random_starts > 0:
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((n_random_starts, cfg.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        radius = beta * rng.random(n_random_starts) ** (1.0 / cfg.dim)
        starts.extend(target.project_many(alpha + radius[:, None] * u))
    if not starts:
        raise ValidationError("attack-point search needs at least one start")
    Z = _pull_into_ball(q0, np.array(starts), alpha, beta)
    Z, f = _descend(cfg, s, target, Z, alpha, beta, tol)

    best = float(np.min(f))
    ties = [i for i in range(len(f)) if f[i] <= best]
    i_best = min(ties, key=lambda i: tuple(Z[i]))
    x_dag = Z[i_best].copy()
    f_best = float(f[i_best])

    infeas = max(target.distance(x_dag), np.linalg.norm(x_dag - alpha) - beta)
    if infeas > FEAS_TOL * (1.0 + beta):
        raise SolverError("attack point is infeasible", infeas)
    stat = _stationarity(cfg, s, target, x_dag, beta)
    if stat > STATIONARITY_TOL:
        raise SolverError("attack point failed the stationarity check", stat)

    minima = tuple(sorted({(round(float(fi), 12),) + tuple(np.round(z, 9)) for fi, z in zip(f, Z)}))
    return AttackPlan(
        x_dagger=x_dag,
        value=-f_best,
        phi=f_best,
        dir_P=_unit(x_dag - s.x_P, "defender heading"),
        dir_E=_unit(x_dag - s.x_E, "attacker heading"),
        local_minima=minima,
    )


def attack_value(cfg: GameConfig, s: GameState, target: TargetSet, seed: int = 0) -> float:
    return attack_plan(cfg, s, target, seed=seed).value


def attack_value_gradient(cfg: GameConfig, s: GameState, target: TargetSet, plan: Optional[AttackPlan] = None) -> np.ndarray:
    """Gradient of the attack value with respect to (x_P, x_E)."""
    if plan is None:
        br = barrier(cfg, s, target)
        if br.region is not Region.ATTACK:
            raise RegionError("attack value gradient requested outside the attack region")
        plan = attack_plan(cfg, s, target, br=br)
    dP = _unit(plan.x_dagger - s.x_P, "attack point minus defender")
    dE = _unit(plan.x_dagger - s.x_E, "attack point minus attacker")
    return np.concatenate([-dP, dE / cfg.gamma])


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimalAuto:
    """Capture-game strategy in the capture region (and on the barrier),
    attack-game strategy in the attack region."""


@dataclass(frozen=True)
class PurePursuit:
    """Defender heads straight at the attacker's current position."""


@dataclass(frozen=True, eq=False)
class DirectTo:
    """Attacker heads straight at a fixed point."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", as_point(self.point))


@dataclass(frozen=True)
class RandomHeading:
    """Piecewise-constant random unit heading, redrawn every ``period`` time
    units from a generator keyed by (seed, bin index)."""

    seed: int = 0
    period: float = 0.05

    def heading(self, dim: int, t: float) -> np.ndarray:
        k = int(math.floor(t / self.period + 1e-9))
        v = np.random.default_rng([self.seed, k]).standard_normal(dim)
        return v / np.linalg.norm(v)


Policy = Union[OptimalAuto, PurePursuit, DirectTo, RandomHeading]


def optimal_directions(cfg: GameConfig, s: GameState, target: TargetSet, seed: int = 0):
    """(region, plan) pair for OptimalAuto players at state ``s``."""
    br = barrier(cfg, s, target)
    if br.region is Region.ATTACK:
        return br, attack_plan(cfg, s, target, seed=seed, br=br)
    return br, capture_plan(cfg, s, target, br=br)


def policy_step(policy: Policy, role: str, cfg: GameConfig, s: GameState, target: TargetSet, seed: int = 0, plan=None) -> np.ndarray:
    """Unit heading of ``role`` ('P' or 'E') under ``policy`` at state ``s``.

    ``plan`` may carry a precomputed capture/attack plan for OptimalAuto.
    """
    if role not in ("P", "E"):
        raise ValidationError(f"role must be 'P' or 'E', got {role!r}")
    if isinstance(policy, OptimalAuto):
        if plan is None:
            _, plan = optimal_directions(cfg, s, target, seed)
        return plan.dir_P if role == "P" else plan.dir_E
    if isinstance(policy, PurePursuit):
        if role != "P":
            raise ValidationError("pure pursuit is a defender policy")
        return _unit(s.x_E - s.x_P, "pursuit heading")
    if isinstance(policy, DirectTo):
        if role != "E":
            raise ValidationError("direct-to is an attacker policy")
        return _unit(policy.point - s.x_E, "direct-to heading")
    if isinstance(policy, RandomHeading):
        return policy.heading(cfg.dim, s.t)
    raise ValidationError(f"unknown policy {policy!r}")
