"""Independent oracles used to certify the analytic machinery.

Each check returns a :class:`CheckReport`. The oracles avoid the formulas
they certify: gradients are compared with central differences of the value
functions, the attack point with an exhaustive grid search, barrier zeros
with a bracketing root finder, and projections with dense boundary sampling.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence
import zlib

import numpy as np
from scipy.optimize import brentq

from .barrier_geometry import (
    TAU_PBS,
    barrier_at,
    map_boundary_to_pbs,
    pbs_analytic,
    sample_pbs_analytic,
    sample_pbs_mesh,
    sphere_directions,
)
from .convex_sets import Ellipsoid, HalfSpace, NormBall, Singleton, TargetSet, as_point, ball_level_set, p_norm_ball
from .errors import GameError, RegionError, SolverError, ValidationError
from .game_core import TAU_B, GameConfig, GameState, Region, barrier
from .strategies import (
    attack_plan,
    attack_value_gradient,
    capture_plan,
    capture_value_gradient,
    phi,
)

FD_STEP = 1e-6
SAMPLE_HALF_WIDTH = 3.0
GAMMA = 0.5

HJI_TOL_EXACT = 1e-8
HJI_TOL_ITERATIVE = 1e-5
GRADIENT_TOL = 1e-4
PBS_TOL = 1e-9


@dataclass
class CheckReport:
    name: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool
    worst_state: Optional[dict] = None
    seed: Optional[int] = None

    @classmethod
    def from_residuals(cls, name, residuals, states, tolerance, seed=None) -> "CheckReport":
        """Aggregate per-sample residuals; pass iff the max is within tolerance."""
        res = np.abs(np.asarray(residuals, dtype=float))
        if len(res) == 0:
            return cls(name, 0, float("nan"), tolerance, False, None, seed)
        k = int(np.argmax(res))
        worst = float(res[k])
        return cls(name, len(res), worst, tolerance, bool(worst <= tolerance), states[k], seed)

    def to_dict(self) -> dict:
        return asdict(self)


def report_json(suite: str, seed: int, reports: Sequence[CheckReport]) -> str:
    return json.dumps(
        {"suite": suite, "seed": seed, "passed": all(r.passed for r in reports), "checks": [r.to_dict() for r in reports]},
        indent=2,
    )


def render_table(reports: Sequence[CheckReport]) -> str:
    rows = [("check", "samples", "max residual", "tolerance", "result")]
    for r in reports:
        rows.append((r.name, str(r.samples), f"{r.max_residual:.3e}", f"{r.tolerance:.1e}", "PASS" if r.passed else "FAIL"))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)


# ---------------------------------------------------------------------------
# oracle targets (rebuilt by name so samples can be farmed out to processes)
# ---------------------------------------------------------------------------

CLOSED_FORM_TARGETS = ("singleton", "half_space", "ball")
ITERATIVE_TARGETS = ("ellipsoid",)


def oracle_target(name: str, dim: int = 3) -> TargetSet:
    if name == "singleton":
        return Singleton(np.zeros(dim))
    if name == "half_space":
        return HalfSpace(np.eye(dim)[-1], 0.0)
    if name == "ball":
        return NormBall(np.zeros(dim), 1.0)
    if name == "ellipsoid":
        if dim != 3:
            raise ValidationError("the oracle ellipsoid is three-dimensional")
        return Ellipsoid([0.8, 0.4, 0.4])
    raise ValidationError(f"unknown oracle target {name!r}")


def _state_dict(s: GameState) -> dict:
    return {"x_P": s.x_P.tolist(), "x_E": s.x_E.tolist()}


def sample_states(
    cfg: GameConfig,
    target: TargetSet,
    region: Region,
    n: int,
    rng: np.random.Generator,
    half_width: float = SAMPLE_HALF_WIDTH,
    max_draws: int = 1_000_000,
) -> List[GameState]:
    """``n`` states of the given region, uniform in a box around the target.

    Rejected: attacker already in the target, players within 1e-3 of each
    other, and states within 10 * TAU_B of the barrier.
    """
    if region is Region.ON_BARRIER:
        raise RegionError("cannot sample barrier states")
    c = target.anchor
    out: List[GameState] = []
    draws = 0
    while len(out) < n:
        if draws >= max_draws:
            raise SolverError(f"state sampler found only {len(out)} of {n} {region.value} states", float(draws))
        X = c + rng.uniform(-half_width, half_width, size=(2, cfg.dim))
        draws += 1
        s = GameState(X[0], X[1])
        if np.linalg.norm(s.x_P - s.x_E) < 1e-3 or target.contains(s.x_E):
            continue
        br = barrier(cfg, s, target)
        if abs(br.value) <= 10.0 * TAU_B or br.region is not region:
            continue
        out.append(s)
    return out


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# ---------------------------------------------------------------------------
# HJI residual
# ---------------------------------------------------------------------------


def hji_residual(cfg: GameConfig, s: GameState, target: TargetSet, seed: int = 0) -> float:
    """<dV/dx, f(x, u_P*, u_E*)> at a state strictly inside a winning region."""
    br = barrier(cfg, s, target)
    if abs(br.value) <= 10.0 * TAU_B:
        raise RegionError("HJI residual is undefined on the barrier")
    if br.region is Region.CAPTURE:
        plan = capture_plan(cfg, s, target, br=br)
        grad = capture_value_gradient(cfg, s, target)
    else:
        plan = attack_plan(cfg, s, target, seed=seed, br=br)
        grad = attack_value_gradient(cfg, s, target, plan=plan)
    n = cfg.dim
    return float(grad[:n] @ (cfg.v_P * plan.dir_P) + grad[n:] @ (cfg.v_E * plan.dir_E))


def _hji_task(item):
    name, dim, gamma, xP, xE, seed = item
    cfg = GameConfig(gamma, dim)
    return hji_residual(cfg, GameState(xP, xE), oracle_target(name, dim), seed)


def check_hji(name: str, region: Region, n: int, seed: int = 0, dim: int = 3, gamma: float = GAMMA, workers: int = 1) -> CheckReport:
    cfg = GameConfig(gamma, dim)
    target = oracle_target(name, dim)
    rng = np.random.default_rng([seed, _stable_hash(name), _stable_hash(region.value)])
    states = sample_states(cfg, target, region, n, rng)
    items = [(name, dim, gamma, s.x_P, s.x_E, seed) for s in states]
    res = _map(_hji_task, items, workers)
    tol = HJI_TOL_EXACT if name in CLOSED_FORM_TARGETS else HJI_TOL_ITERATIVE
    return CheckReport.from_residuals(f"hji/{name}/{region.value}", res, [_state_dict(s) for s in states], tol, seed)


def _stable_hash(text: str) -> int:
    # Python's hash() is salted per process; seeds must be reproducible
    return zlib.crc32(text.encode())


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def fd_gradient(value_fn: Callable, s, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient with respect to the stacked state.

    ``s`` may be a :class:`GameState` (``value_fn`` then receives states) or
    a plain vector (``value_fn`` receives vectors).
    """
    is_state = isinstance(s, GameState)
    x = s.vector if is_state else np.asarray(s, dtype=float)
    if not step > 0.0:
        raise ValidationError("finite-difference step must be positive")
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        vals = []
        for sign in (1.0, -1.0):
            xp = x.copy()
            xp[i] += sign * step
            probe = GameState.from_vector(xp, s.t) if is_state else xp
            try:
                v = float(value_fn(probe))
            except GameError as exc:
                raise SolverError(f"value function failed at probe {i}{'+' if sign > 0 else '-'}: {exc}") from exc
            if not np.isfinite(v):
                raise SolverError(f"value function is not finite at probe {i}")
            vals.append(v)
        g[i] = (vals[0] - vals[1]) / (2.0 * step)
    return g


def _capture_value(cfg, target):
    def V(s):
        br = barrier(cfg, s, target)
        if br.region is Region.ATTACK:
            raise RegionError("probe left the capture region")
        return br.value

    return V


def _attack_value(cfg, target, x_dagger, seed):
    # Probes are 1e-6 away from the base state, whose attack point came from
    # the full multi-start search; continuing that minimizer is enough.
    def V(s):
        return attack_plan(cfg, s, target, seed=seed, n_random_starts=0, warm_starts=(x_dagger,)).value

    return V


def _ambiguous_minimizer(plan, tol: float = 1e-6) -> bool:
    """Two well-separated local minima with (nearly) the same objective make
    the attack value non-differentiable; such states are skipped."""
    pts = [np.array(m[1:]) for m in plan.local_minima if m[0] <= plan.phi + tol]
    return any(np.linalg.norm(p - plan.x_dagger) > 1e-6 for p in pts)


def _gradient_task(item):
    name, dim, gamma, xP, xE, seed = item
    cfg = GameConfig(gamma, dim)
    target = oracle_target(name, dim)
    s = GameState(xP, xE)
    br = barrier(cfg, s, target)
    if br.region is Region.CAPTURE:
        analytic = capture_value_gradient(cfg, s, target)
        numeric = fd_gradient(_capture_value(cfg, target), s)
    else:
        plan = attack_plan(cfg, s, target, seed=seed, br=br)
        if _ambiguous_minimizer(plan):
            return None
        analytic = attack_value_gradient(cfg, s, target, plan=plan)
        numeric = fd_gradient(_attack_value(cfg, target, plan.x_dagger, seed), s)
    return float(np.max(np.abs(analytic - numeric)))


def check_gradients(name: str, region: Region, n: int, seed: int = 0, dim: int = 3, gamma: float = GAMMA, workers: int = 1) -> CheckReport:
    cfg = GameConfig(gamma, dim)
    target = oracle_target(name, dim)
    rng = np.random.default_rng([seed, _stable_hash("grad/" + name), _stable_hash(region.value)])
    # keep every sample a FD probe away from the barrier so probes stay in-region
    states = [s for s in sample_states(cfg, target, region, 2 * n, rng) if abs(barrier(cfg, s, target).value) > 1e-4]
    kept = []
    pos = 0
    # evaluate only as many samples as needed to keep n of them
    while len(kept) < n and pos < len(states):
        chunk = states[pos : pos + n - len(kept)]
        pos += len(chunk)
        items = [(name, dim, gamma, s.x_P, s.x_E, seed) for s in chunk]
        res = _map(_gradient_task, items, workers)
        kept.extend((r, s) for r, s in zip(res, chunk) if r is not None)
    return CheckReport.from_residuals(
        f"gradients/{name}/{region.value}", [r for r, _ in kept], [_state_dict(s) for _, s in kept], GRADIENT_TOL, seed
    )


# ---------------------------------------------------------------------------
# attack-point grid oracle
# ---------------------------------------------------------------------------


def grid_minimize_phi(cfg: GameConfig, s: GameState, target: TargetSet, resolution: int):
    """Minimize phi over cl(A) and the target by exhaustive search.

    Candidates: a regular ``resolution``-per-axis grid over the bounding box
    of cl(A), plus each grid point's projection onto the target and its
    radial projection onto the Apollonius sphere (so boundary minimizers are
    resolved to grid spacing). Only candidates in both sets are kept.
    Returns ``(point, value, spacing)``.
    """
    if cfg.dim > 3:
        raise ValidationError("grid oracle supports dimension <= 3")
    if resolution < 2:
        raise ValidationError("grid resolution must be at least 2")
    br = barrier(cfg, s, target)
    if br.region is Region.CAPTURE:
        raise RegionError("grid oracle requires an attack-region state")
    alpha, beta = br.apollonius.alpha, br.apollonius.beta
    axes = [np.linspace(a - beta, a + beta, resolution) for a in alpha]
    spacing = 2.0 * beta / (resolution - 1)
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, cfg.dim)
    d = G - alpha
    r = np.linalg.norm(d, axis=1)
    nz = r > 0.0
    radial = alpha + beta * d[nz] / r[nz, None]
    C = np.vstack([G, target.project_many(G), radial])
    tol = 1e-12 * (1.0 + beta)
    keep = (np.linalg.norm(C - alpha, axis=1) <= beta + tol) & target.contains_many(C, tol=1e-12)
    if not keep.any():
        raise SolverError("no grid point is feasible; increase the resolution", spacing)
    C = C[keep]
    f = phi(cfg, s, C)
    k = int(np.argmin(f))
    return C[k].copy(), float(f[k]), spacing


def check_attack_oracle(n: int = 50, resolution: int = 400, seed: int = 0, gamma: float = GAMMA) -> List[CheckReport]:
    """Attack points of 2-D ball and half-space instances versus the grid
    oracle: distance within one grid spacing, objective no worse than the
    oracle's by more than 1e-6."""
    cfg = GameConfig(gamma, 2)
    rng = np.random.default_rng([seed, _stable_hash("attack-oracle")])
    names = ("ball", "half_space")
    per = [n // len(names) + (1 if i < n % len(names) else 0) for i in range(len(names))]
    dist_res, val_res, states = [], [], []
    for name, m in zip(names, per):
        target = oracle_target(name, 2)
        for s in sample_states(cfg, target, Region.ATTACK, m, rng):
            plan = attack_plan(cfg, s, target, seed=seed)
            z, v, h = grid_minimize_phi(cfg, s, target, resolution)
            dist_res.append(np.linalg.norm(plan.x_dagger - z) / h)
            val_res.append(max(plan.phi - v, 0.0))
            states.append(dict(_state_dict(s), target=name))
    return [
        CheckReport.from_residuals("attack-oracle/distance-in-grid-spacings", dist_res, states, 1.0, seed),
        CheckReport.from_residuals("attack-oracle/objective-excess", val_res, states, 1e-6, seed),
    ]


# ---------------------------------------------------------------------------
# barrier zero crossings and PBS checks
# ---------------------------------------------------------------------------


def barrier_zero_on_ray(target: TargetSet, x_P0, cfg: GameConfig, origin, direction, r_max: float = 1e6) -> np.ndarray:
    """Attacker position on ``origin + r * direction`` (r > 0) where the
    barrier vanishes, found by doubling then Brent's method. ``origin`` must
    give a negative barrier (e.g. a point of the target)."""
    x_P0 = as_point(x_P0, cfg.dim)
    o = as_point(origin, cfg.dim)
    u = as_point(direction, cfg.dim)
    u = u / np.linalg.norm(u)

    def B(r):
        return barrier_at(target, x_P0, cfg, o + r * u)

    if not B(0.0) < 0.0:
        raise ValidationError("ray origin must lie strictly on the attacker-wins side")
    hi = 1.0
    while B(hi) <= 0.0:
        hi *= 2.0
        if hi > r_max:
            raise SolverError("barrier does not change sign along the ray", hi)
    r = brentq(B, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return o + r * u


def _ray_directions(target: TargetSet, dim: int, n: int, rng: np.random.Generator, gamma: float = GAMMA) -> np.ndarray:
    U = rng.standard_normal((n, dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    if isinstance(target, HalfSpace):
        # the surface is asymptotic to a cone whose elevation has sine gamma;
        # only steeper rays reach it
        a = target.normal
        T = U - np.outer(U @ a, a)
        T /= np.linalg.norm(T, axis=1, keepdims=True)
        c = rng.uniform(0.6 * gamma + 0.4, 1.0, size=n)
        U = np.sqrt(1.0 - c * c)[:, None] * T + np.outer(c, a)
    return U


def check_analytic_pbs(name: str, n: int = 500, seed: int = 0, x_P0=(1.5, 0.0, 1.5), gamma: float = GAMMA) -> List[CheckReport]:
    """Analytic PBS points have zero barrier, and barrier zeros found by
    root bracketing satisfy the analytic implicit equation."""
    cfg = GameConfig(gamma, 3)
    target = oracle_target(name, 3)
    x_P0 = as_point(x_P0, 3)
    res = int(np.ceil(np.sqrt(n)))
    mesh = sample_pbs_analytic(target, x_P0, cfg, res)
    pts = mesh.points[mesh.ok()][:n]
    b = [barrier_at(target, x_P0, cfg, z) for z in pts]
    rng = np.random.default_rng([seed, _stable_hash("pbs/" + name)])
    U = _ray_directions(target, 3, n, rng, gamma)
    zeros = [barrier_zero_on_ray(target, x_P0, cfg, target.anchor, u) for u in U]
    r = [pbs_analytic(target, x_P0, cfg, z) for z in zeros]
    return [
        CheckReport.from_residuals(f"pbs/{name}/barrier-on-analytic-points", b, [p.tolist() for p in pts], PBS_TOL, seed),
        CheckReport.from_residuals(f"pbs/{name}/analytic-residual-at-barrier-zeros", r, [z.tolist() for z in zeros], PBS_TOL, seed),
    ]


def check_transformation_map(x_P0=(1.5, 0.0, 1.5), n_ball: int = 100, resolution: int = 32, gamma: float = GAMMA, seed: int = 0) -> List[CheckReport]:
    """Boundary-to-PBS map against the closed-form ball surface, and the
    barrier at every vertex of the ellipsoid and quartic-cube meshes."""
    cfg = GameConfig(gamma, 3)
    x_P0 = as_point(x_P0, 3)
    ball = oracle_target("ball", 3)
    smooth = ball_level_set(ball.center, ball.radius)
    U, _ = sphere_directions(3, int(np.ceil(np.sqrt(n_ball))))
    pts = [ball.center + ball.radius * u for u in U[:n_ball]]
    res = []
    for p in pts:
        smp = map_boundary_to_pbs(p, smooth, x_P0, cfg)
        res.append(pbs_analytic(ball, x_P0, cfg, smp.pbs_point))
    reports = [CheckReport.from_residuals("pbs-map/ball-level-set/analytic-residual", res, [p.tolist() for p in pts], 1e-8, seed)]
    for label, target in (("ellipsoid", oracle_target("ellipsoid", 3)), ("quartic-cube", p_norm_ball(4, 1.0, dim=3))):
        mesh = sample_pbs_mesh(target, x_P0, cfg, resolution)
        ok = mesh.ok()
        verts = mesh.points[ok]
        b = [barrier_at(target, x_P0, cfg, z) for z in verts]
        rep = CheckReport.from_residuals(f"pbs-map/{label}/barrier-at-vertices", b, [v.tolist() for v in verts], TAU_PBS, seed)
        if not ok.all():
            rep.passed = False
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# projection oracle
# ---------------------------------------------------------------------------


def boundary_samples(target: TargetSet, resolution: int, steps: int = 60) -> np.ndarray:
    """Boundary points along ``sphere_directions`` rays from the anchor,
    located by vectorized bisection on membership alone."""
    U, _ = sphere_directions(target.dim, resolution)
    c = target.anchor
    hi = np.ones(len(U))
    for _ in range(200):
        out = ~target.contains_many(c + hi[:, None] * U, tol=0.0)
        if out.all():
            break
        hi[~out] *= 2.0
    else:
        raise SolverError("target is unbounded along a sample ray")
    lo = np.zeros(len(U))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        inside = target.contains_many(c + mid[:, None] * U, tol=0.0)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return c + lo[:, None] * U


def dense_projection(target: TargetSet, x, resolution: int = 200, samples: Optional[np.ndarray] = None):
    """Nearest point among dense boundary samples (membership tests only).
    Returns (point, distance)."""
    x = as_point(x, target.dim)
    if target.contains(x, 0.0):
        return x.copy(), 0.0
    P = boundary_samples(target, resolution) if samples is None else samples
    d = np.linalg.norm(P - x, axis=1)
    k = int(np.argmin(d))
    return P[k].copy(), float(d[k])


def check_projection(n: int = 100, resolution: int = 300, seed: int = 0) -> List[CheckReport]:
    """Ellipsoid projections against the dense-sample oracle: never farther
    than the best sample, and no more than 1e-3 closer (sampling gap)."""
    target = oracle_target("ellipsoid", 3)
    rng = np.random.default_rng([seed, _stable_hash("projection")])
    X = rng.uniform(-2.0, 2.0, size=(n, 3))
    P = boundary_samples(target, resolution)
    excess, gap, states = [], [], []
    for x in X:
        _, d_oracle = dense_projection(target, x, samples=P)
        d = target.distance(x)
        excess.append(max(d - d_oracle, 0.0))
        gap.append(d_oracle - d)
        states.append(x.tolist())
    return [
        CheckReport.from_residuals("projection/ellipsoid/excess-over-dense-oracle", excess, states, 1e-9, seed),
        CheckReport.from_residuals("projection/ellipsoid/gap-to-dense-oracle", gap, states, 1e-3, seed),
    ]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def suite_hji(seed: int = 0, n: int = 1000, workers: int = 1) -> List[CheckReport]:
    return [
        check_hji(name, region, n, seed, workers=workers)
        for name in CLOSED_FORM_TARGETS + ITERATIVE_TARGETS
        for region in (Region.CAPTURE, Region.ATTACK)
    ]


def suite_gradients(seed: int = 0, n: int = 200, workers: int = 1) -> List[CheckReport]:
    return [
        check_gradients(name, region, n, seed, workers=workers)
        for name in ("ball", "half_space", "ellipsoid")
        for region in (Region.CAPTURE, Region.ATTACK)
    ]


def suite_attack_oracle(seed: int = 0, n: int = 50, workers: int = 1) -> List[CheckReport]:
    return check_attack_oracle(n=n, seed=seed)


def suite_pbs(seed: int = 0, n: int = 500, workers: int = 1) -> List[CheckReport]:
    out = []
    for name in CLOSED_FORM_TARGETS:
        out.extend(check_analytic_pbs(name, n=n, seed=seed))
    out.extend(check_transformation_map(seed=seed))
    return out


def suite_projection(seed: int = 0, n: int = 100, workers: int = 1) -> List[CheckReport]:
    return check_projection(n=n, seed=seed)


SUITES: Dict[str, Callable[..., List[CheckReport]]] = {
    "hji": suite_hji,
    "gradients": suite_gradients,
    "attack-oracle": suite_attack_oracle,
    "pbs": suite_pbs,
    "projection": suite_projection,
}


def run_suite(name: str, seed: int = 0, workers: int = 1) -> List[CheckReport]:
    if name == "all":
        return [r for key in SUITES for r in SUITES[key](seed=seed, workers=workers)]
    if name not in SUITES:
        raise ValidationError(f"unknown suite {name!r}; choose from {', '.join(list(SUITES) + ['all'])}")
    return SUITES[name](seed=seed, workers=workers)
