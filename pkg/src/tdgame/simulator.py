"""Closed-loop simulation of the target-defense game.

Both players move at full speed along feedback headings. States are advanced
with a fixed-step RK4 scheme whose stage headings are re-evaluated from the
policies; the barrier value is logged at every step and sign changes are
reported as switch times.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .convex_sets import TAU_BND, TargetSet, as_point
from .errors import DimensionError, GameError, SimulationError, ValidationError
from .game_core import GameConfig, GameState, Region, Termination, barrier, check_termination
from .strategies import (
    DirectTo,
    OptimalAuto,
    Policy,
    PurePursuit,
    RandomHeading,
    attack_plan,
    capture_plan,
    policy_step,
)

OUTCOME_HORIZON = "HorizonExceeded"

# Full multi-start attack-point search is repeated every this many steps;
# in between the previous attack point warm-starts the search.
RESTART_EVERY = 100


@dataclass(frozen=True, eq=False)
class Scenario:
    cfg: GameConfig
    target: TargetSet
    x_P0: np.ndarray
    x_E0: np.ndarray
    policy_P: Policy = field(default_factory=OptimalAuto)
    policy_E: Policy = field(default_factory=OptimalAuto)
    dt: float = 1e-3
    t_max: float = 50.0
    capture_radius: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        n = self.cfg.dim
        if self.target.dim != n:
            raise DimensionError("target dimension does not match the game dimension")
        object.__setattr__(self, "x_P0", as_point(self.x_P0, n))
        object.__setattr__(self, "x_E0", as_point(self.x_E0, n))
        if not self.dt > 0.0:
            raise ValidationError("dt must be positive")
        if not self.t_max > 0.0:
            raise ValidationError("t_max must be positive")
        if not self.capture_radius >= 0.0:
            raise ValidationError("capture radius must be nonnegative")
        if isinstance(self.policy_P, DirectTo):
            raise ValidationError("DirectTo is an attacker policy")
        if isinstance(self.policy_E, PurePursuit):
            raise ValidationError("pure pursuit is a defender policy")
        if isinstance(self.policy_E, DirectTo):
            pt = as_point(self.policy_E.point)
            if pt.shape[0] != n:
                raise DimensionError("direct_to point has the wrong dimension")
            if not self.target.contains(pt, tol=TAU_BND):
                raise ValidationError("direct_to point must lie in the target set")


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Per-step samples plus the outcome of one simulated game.

    Row ``k`` holds the state at ``t[k]`` and the headings applied on the
    step that starts there; the final row repeats the last applied headings.
    """

    t: np.ndarray
    x_P: np.ndarray
    x_E: np.ndarray
    barrier: np.ndarray
    regime: List[str]
    dir_P: np.ndarray
    dir_E: np.ndarray
    outcome: str
    t_f: float
    switch_times: List[float]
    payoff: float
    capture_radius: float
    dt: float
    seed: int

    def __len__(self):
        return len(self.t)

    def to_csv(self) -> str:
        n = self.x_P.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["t"]
            + [f"x_P{i}" for i in range(n)]
            + [f"x_E{i}" for i in range(n)]
            + ["B", "regime"]
            + [f"u_P{i}" for i in range(n)]
            + [f"u_E{i}" for i in range(n)]
        )
        for k in range(len(self.t)):
            w.writerow(
                [repr(float(self.t[k]))]
                + [repr(float(v)) for v in self.x_P[k]]
                + [repr(float(v)) for v in self.x_E[k]]
                + [repr(float(self.barrier[k])), self.regime[k]]
                + [repr(float(v)) for v in self.dir_P[k]]
                + [repr(float(v)) for v in self.dir_E[k]]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "t_f": self.t_f,
            "payoff": self.payoff,
            "switch_times": list(self.switch_times),
            "capture_radius": self.capture_radius,
            "dt": self.dt,
            "seed": self.seed,
            "steps": len(self.t) - 1,
            "t": self.t.tolist(),
            "x_P": self.x_P.tolist(),
            "x_E": self.x_E.tolist(),
            "barrier": self.barrier.tolist(),
            "regime": list(self.regime),
            "dir_P": self.dir_P.tolist(),
            "dir_E": self.dir_E.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class _Controller:
    """Evaluates both policies at a state, sharing the optimal-play plan and
    warm-starting the attack-point search from the previous answer."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.last_dagger: Optional[np.ndarray] = None
        self.full_search_step = -RESTART_EVERY
        self.step = 0
        self.needs_plan = isinstance(sc.policy_P, OptimalAuto) or isinstance(sc.policy_E, OptimalAuto)

    def barrier_and_plan(self, s: GameState):
        sc = self.sc
        br = barrier(sc.cfg, s, sc.target)
        if not self.needs_plan:
            return br, None
        if br.region is not Region.ATTACK:
            return br, capture_plan(sc.cfg, s, sc.target, br=br)
        if self.last_dagger is None or self.step - self.full_search_step >= RESTART_EVERY:
            plan = attack_plan(sc.cfg, s, sc.target, seed=sc.seed, br=br)
            self.full_search_step = self.step
        else:
            plan = attack_plan(
                sc.cfg, s, sc.target, seed=sc.seed, br=br,
                n_random_starts=0, warm_starts=(self.last_dagger,), default_starts=False,
            )
        self.last_dagger = plan.x_dagger
        return br, plan

    def headings(self, s: GameState, plan):
        sc = self.sc
        u_P = policy_step(sc.policy_P, "P", sc.cfg, s, sc.target, seed=sc.seed, plan=plan)
        u_E = policy_step(sc.policy_E, "E", sc.cfg, s, sc.target, seed=sc.seed, plan=plan)
        return np.asarray(u_P, dtype=float), np.asarray(u_E, dtype=float)


def _is_unit(u) -> bool:
    return bool(np.all(np.isfinite(u))) and abs(float(np.linalg.norm(u)) - 1.0) <= 1e-6


def _rk4_step(ctrl: _Controller, sc: Scenario, x_P, x_E, t, h, u0):
    """One RK4 step of size ``h`` from (x_P, x_E) with first-stage headings
    ``u0``. Stage states at which a heading is undefined (coincident players,
    attacker already inside the target) reuse the first-stage heading.

    The RK4-weighted heading is renormalized so each player covers exactly
    ``v * h`` per step; for constant headings this is plain RK4.
    """
    v_P, v_E = sc.cfg.v_P, sc.cfg.v_E
    ks = [u0]
    for c in (0.5, 0.5, 1.0):
        kP, kE = ks[-1]
        sP = x_P + c * h * v_P * kP
        sE = x_E + c * h * v_E * kE
        try:
            s = GameState(sP, sE, t + c * h)
            _, plan = ctrl.barrier_and_plan(s)
            uP, uE = ctrl.headings(s, plan)
        except GameError:
            uP, uE = u0
        ks.append((uP if _is_unit(uP) else u0[0], uE if _is_unit(uE) else u0[1]))
    w = (1.0, 2.0, 2.0, 1.0)
    dP = sum(wi * k[0] for wi, k in zip(w, ks)) / 6.0
    dE = sum(wi * k[1] for wi, k in zip(w, ks)) / 6.0
    nP, nE = np.linalg.norm(dP), np.linalg.norm(dE)
    if nP > 0.0:
        dP = dP / nP
    if nE > 0.0:
        dE = dE / nE
    return x_P + h * v_P * dP, x_E + h * v_E * dE


def _switch_times(t: np.ndarray, B: np.ndarray, regimes: List[str]) -> List[float]:
    """Barrier zero crossings, linearly interpolated between the last sample
    on one side and the first on the other; samples inside the dead-band
    are skipped."""
    out = []
    last = None
    for k, r in enumerate(regimes):
        if r == Region.ON_BARRIER.value:
            continue
        if last is not None and regimes[last] != r:
            b0, b1 = B[last], B[k]
            out.append(float(t[last] + (t[k] - t[last]) * b0 / (b0 - b1)))
        last = k
    return out


def _segment_min_distance(r0: np.ndarray, r1: np.ndarray) -> float:
    """Distance from the origin to the segment r0 -> r1."""
    d = r1 - r0
    dd = float(d @ d)
    lam = 0.0 if dd == 0.0 else min(1.0, max(0.0, -float(r0 @ d) / dd))
    return float(np.linalg.norm(r0 + lam * d))


def _step_status(sc: Scenario, x_P, x_E, nP, nE) -> Termination:
    """Terminal status after a step from (x_P, x_E) to (nP, nE).

    Capture is also detected when the players pass within the capture radius
    between the two samples (relative motion interpolated linearly), so fast
    closing speeds with a small radius cannot tunnel through each other.
    """
    status = check_termination(sc.cfg, GameState(nP, nE), sc.target, sc.capture_radius)
    if status is Termination.RUNNING and _segment_min_distance(x_E - x_P, nE - nP) <= sc.capture_radius:
        return Termination.CAPTURED
    return status


def _payoff(sc: Scenario, outcome: str, x_P, x_E) -> float:
    if outcome == Termination.CAPTURED.value:
        return float(sc.target.distance(x_E))
    if outcome == Termination.ATTACKED.value:
        return float(np.linalg.norm(x_E - x_P))
    return float("nan")


def simulate(sc: Scenario) -> TrajectoryRecord:
    """Integrate the game until capture, attack or the horizon ``t_max``."""
    cfg, target = sc.cfg, sc.target
    ctrl = _Controller(sc)
    x_P, x_E, t = sc.x_P0.copy(), sc.x_E0.copy(), 0.0
    ts, XP, XE, Bs, regs, UP, UE = [], [], [], [], [], [], []

    def evaluate(step, x_P, x_E, t):
        ctrl.step = step
        try:
            s = GameState(x_P, x_E, t)
            br, plan = ctrl.barrier_and_plan(s)
            u = ctrl.headings(s, plan)
        except GameError as exc:
            raise SimulationError(f"strategy evaluation failed: {exc}", step) from exc
        if not (_is_unit(u[0]) and _is_unit(u[1])):
            raise SimulationError("policy returned a non-unit heading", step)
        return br, u

    status = check_termination(cfg, GameState(x_P, x_E, t), target, sc.capture_radius)
    if status is not Termination.RUNNING:
        br = barrier(cfg, GameState(x_P, x_E, t), target)
        z = np.zeros(cfg.dim)
        return TrajectoryRecord(
            np.array([0.0]), x_P[None, :], x_E[None, :], np.array([br.value]), [br.region.value],
            z[None, :], z[None, :], status.value, 0.0, [], _payoff(sc, status.value, x_P, x_E),
            sc.capture_radius, sc.dt, sc.seed,
        )

    n_steps = int(math.ceil(sc.t_max / sc.dt - 1e-9))
    outcome = OUTCOME_HORIZON
    u = None
    for k in range(n_steps):
        br, u = evaluate(k, x_P, x_E, t)
        ts.append(t)
        XP.append(x_P)
        XE.append(x_E)
        Bs.append(br.value)
        regs.append(br.region.value)
        UP.append(u[0])
        UE.append(u[1])

        h = min(sc.dt, sc.t_max - t)
        nP, nE = _rk4_step(ctrl, sc, x_P, x_E, t, h, u)
        if not (np.all(np.isfinite(nP)) and np.all(np.isfinite(nE))):
            raise SimulationError("non-finite state", k)
        status = _step_status(sc, x_P, x_E, nP, nE)
        if status is not Termination.RUNNING:
            # bisection on the step length for the first terminal instant
            lo, hi = 0.0, h
            while hi - lo > sc.dt * 1e-6:
                mid = 0.5 * (lo + hi)
                mP, mE = _rk4_step(ctrl, sc, x_P, x_E, t, mid, u)
                if _step_status(sc, x_P, x_E, mP, mE) is Termination.RUNNING:
                    lo = mid
                else:
                    hi = mid
            if hi < h:
                nP, nE = _rk4_step(ctrl, sc, x_P, x_E, t, hi, u)
            status = _step_status(sc, x_P, x_E, nP, nE)
            x_P, x_E, t = nP, nE, t + hi
            outcome = status.value
            break
        x_P, x_E, t = nP, nE, t + h
        if t >= sc.t_max - 1e-12:
            break

    br = barrier(cfg, GameState(x_P, x_E, t), target)
    ts.append(t)
    XP.append(x_P)
    XE.append(x_E)
    Bs.append(br.value)
    regs.append(br.region.value)
    UP.append(u[0])
    UE.append(u[1])
    t_arr, B_arr = np.array(ts), np.array(Bs)
    return TrajectoryRecord(
        t=t_arr,
        x_P=np.array(XP),
        x_E=np.array(XE),
        barrier=B_arr,
        regime=regs,
        dir_P=np.array(UP),
        dir_E=np.array(UE),
        outcome=outcome,
        t_f=float(t),
        switch_times=_switch_times(t_arr, B_arr, regs),
        payoff=_payoff(sc, outcome, x_P, x_E),
        capture_radius=sc.capture_radius,
        dt=sc.dt,
        seed=sc.seed,
    )


def straightness_deviation(rec: TrajectoryRecord, agent: str) -> float:
    """Largest distance of a sampled position from the chord joining the
    first and last positions, relative to the chord length."""
    if agent not in ("P", "E"):
        raise ValidationError(f"agent must be 'P' or 'E', got {agent!r}")
    X = rec.x_P if agent == "P" else rec.x_E
    a, b = X[0], X[-1]
    chord = b - a
    L = float(np.linalg.norm(chord))
    if L == 0.0:
        raise ValidationError("zero-length chord")
    d = chord / L
    rel = X - a
    perp = rel - np.outer(rel @ d, d)
    return float(np.max(np.linalg.norm(perp, axis=1)) / L)
