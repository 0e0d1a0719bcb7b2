"""Projected barrier surface (PBS) for a fixed defender position.

For the singleton, half-space and norm ball the PBS has an implicit closed
form.  For targets with a smooth boundary {F = 0}, every boundary point p
maps to the unique evader start x_E with

    x_E = grad F(p) * xi + gamma^2 x_P0 + (1 - gamma^2) p,   xi > 0,

where xi is the positive root of a quadratic; the image of the whole
boundary is the PBS.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .convex_sets import HalfSpace, NormBall, Singleton, TargetSet, as_point
from .errors import DegenerateError, GameError, ValidationError
from .game_core import GameConfig, GameState, barrier

TAU_PBS = 1e-7
RAY_BISECTION_STEPS = 80


@dataclass(frozen=True, eq=False)
class PbsSample:
    boundary_point: np.ndarray
    xi_plus: float
    pbs_point: np.ndarray
    # False when the mapped evader start lies inside the target (possible
    # only when the defender itself starts inside it).
    valid: bool = True


@dataclass(eq=False)
class PbsMesh:
    """Surface samples on a structured grid.

    ``points`` has one row per grid node (NaN rows for failed nodes).  For
    n = 2 the grid is a polyline; for n = 3 it is ``grid_shape = (rows,
    cols)`` in row-major order with columns wrapping when ``periodic``.
    """

    points: np.ndarray
    grid_shape: Tuple[int, ...]
    periodic: bool
    samples: Optional[List[Optional[PbsSample]]] = None
    failures: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def ok(self) -> np.ndarray:
        return np.all(np.isfinite(self.points), axis=1)

    def segments(self) -> List[Tuple[int, int]]:
        m = len(self.points)
        pairs = [(i, i + 1) for i in range(m - 1)]
        if self.periodic and m > 2:
            pairs.append((m - 1, 0))
        good = self.ok()
        return [(i, j) for i, j in pairs if good[i] and good[j]]

    def triangles(self) -> List[Tuple[int, int, int]]:
        if len(self.grid_shape) != 2:
            return []
        rows, cols = self.grid_shape
        good = self.ok()
        tris = []
        last_col = cols if self.periodic and cols > 2 else cols - 1
        for i in range(rows - 1):
            for j in range(last_col):
                a = i * cols + j
                b = (i + 1) * cols + j
                c = (i + 1) * cols + (j + 1) % cols
                d = i * cols + (j + 1) % cols
                for tri in ((a, b, c), (a, c, d)):
                    if all(good[k] for k in tri):
                        tris.append(tri)
        return tris

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        n = self.dim
        if self.samples is not None:
            writer.writerow([f"p{k}" for k in range(n)] + [f"pbs{k}" for k in range(n)] + ["xi_plus", "valid"])
            for smp in self.samples:
                if smp is None:
                    continue
                writer.writerow(
                    [repr(float(v)) for v in smp.boundary_point]
                    + [repr(float(v)) for v in smp.pbs_point]
                    + [repr(smp.xi_plus), int(smp.valid)]
                )
        else:
            writer.writerow([f"pbs{k}" for k in range(n)])
            for row in self.points[self.ok()]:
                writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        verts = [None if not np.all(np.isfinite(p)) else p.tolist() for p in self.points]
        doc = {
            "dimension": self.dim,
            "grid_shape": list(self.grid_shape),
            "vertices": verts,
            "triangles": [list(t) for t in self.triangles()],
            "segments": [list(s) for s in self.segments()] if self.dim == 2 else [],
            "failures": [{"index": i, "message": msg} for i, msg in self.failures],
        }
        return json.dumps(doc, indent=1)

    def to_svg(self, extra_points=(), size: int = 480) -> str:
        """SVG polyline of a 2-D curve, scaled to fit the canvas."""
        if self.dim != 2:
            raise ValidationError("SVG export is limited to 2-D curves")
        pts = self.points[self.ok()]
        allpts = np.vstack([pts] + [np.atleast_2d(p) for p in extra_points]) if len(extra_points) else pts
        lo, hi = allpts.min(axis=0), allpts.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        pad = 0.05 * span

        def tx(p):
            x = (p[0] - lo[0] + pad) / (span + 2 * pad) * size
            y = size - (p[1] - lo[1] + pad) / (span + 2 * pad) * size
            return f"{x:.3f},{y:.3f}"

        ordered = [self.points[i] for i in range(len(self.points)) if self.ok()[i]]
        if self.periodic and ordered:
            ordered.append(ordered[0])
        lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
            f'<polyline fill="none" stroke="red" stroke-width="1.5" points="{" ".join(tx(p) for p in ordered)}"/>',
        ]
        for p in extra_points:
            lines.append(f'<circle cx="{tx(p).split(",")[0]}" cy="{tx(p).split(",")[1]}" r="3" fill="blue"/>')
        lines.append("</svg>")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# analytic PBS
# ---------------------------------------------------------------------------


def _hyperplane_basis(normal: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the complement of ``normal``."""
    n = normal.shape[0]
    q, _ = np.linalg.qr(np.column_stack([normal, np.eye(n)]))
    return q[:, 1:n].T


def pbs_analytic(target: TargetSet, x_P0, cfg: GameConfig, query) -> float:
    """Implicit residual whose zero set is the PBS; same sign as the barrier.

    Singleton:  ||z - c|| - gamma ||x_P0 - c||
    HalfSpace:  h(z)^2 / (gamma^2 h_P^2) - |t(z) - t_P|^2 / ((1-gamma^2) h_P^2) - 1
                (h = height above the plane, t = in-plane component)
    NormBall:   ||z - c - gamma^2 (x_P0 - c)|| - gamma ||z - x_P0|| - (1-gamma^2) r
    """
    x_P0 = as_point(x_P0, cfg.dim)
    z = as_point(query, cfg.dim)
    g2 = cfg.gamma**2
    if not isinstance(target, (Singleton, HalfSpace, NormBall)):
        raise ValidationError(f"no closed-form PBS for {target.kind} targets")
    if target.contains(z, 0.0) and not isinstance(target, Singleton):
        raise ValidationError("query point lies inside the target")
    if isinstance(target, Singleton):
        if np.array_equal(z, target.point):
            raise ValidationError("query point lies inside the target")
        c = target.point
        return float(np.linalg.norm(z - c) - cfg.gamma * np.linalg.norm(x_P0 - c))
    if isinstance(target, NormBall):
        c = target.center
        return float(
            np.linalg.norm(z - c - g2 * (x_P0 - c))
            - cfg.gamma * np.linalg.norm(z - x_P0)
            - (1.0 - g2) * target.radius
        )
    a = target.normal
    h_P = target.height(x_P0)
    if h_P == 0.0:
        raise DegenerateError("defender on the bounding hyperplane: PBS degenerates")
    h = target.height(z)
    tang = (z - h * a) - (x_P0 - h_P * a)
    return float(h**2 / (g2 * h_P**2) - (tang @ tang) / ((1.0 - g2) * h_P**2) - 1.0)


def sphere_directions(dim: int, resolution: int) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Deterministic unit directions: a circle for n = 2, a (polar x azimuth)
    grid for n = 3.  The first direction is always e_1."""
    if resolution < 1:
        raise ValidationError("resolution must be at least 1")
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(ang), np.sin(ang)]), (resolution,)
    if dim == 3:
        # cell-centred polar angles avoid duplicated pole nodes; the
        # resolution-1 grid is exactly e_1
        theta = np.pi * (np.arange(resolution) + 0.5) / resolution
        phi = 2.0 * np.pi * np.arange(resolution) / resolution
        T, P = np.meshgrid(theta, phi, indexing="ij")
        dirs = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)
        return dirs.reshape(-1, 3), (resolution, resolution)
    raise ValidationError(f"surface sampling supports dimensions 2 and 3, got {dim}")


def _analytic_point(target: TargetSet, x_P0: np.ndarray, cfg: GameConfig, u: np.ndarray) -> np.ndarray:
    """PBS point along direction ``u`` (sphere targets) from the target center."""
    if isinstance(target, Singleton):
        c = target.point
        return c + cfg.gamma * np.linalg.norm(x_P0 - c) * u
    c, r = target.center, target.radius

    def f(rho):
        return pbs_analytic(target, x_P0, cfg, c + rho * u)

    lo = r * (1.0 + 1e-12)
    hi = 2.0 * r + np.linalg.norm(x_P0 - c)
    while f(hi) <= 0.0:
        hi *= 2.0
    rho = brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return c + rho * u


def halfspace_pbs_point(target: HalfSpace, x_P0, cfg: GameConfig, offset) -> np.ndarray:
    """PBS point above the in-plane offset ``offset`` (n-1 coordinates in an
    orthonormal basis of the plane, measured from the defender's foot)."""
    x_P0 = as_point(x_P0, cfg.dim)
    a = target.normal
    h_P = target.height(x_P0)
    if h_P == 0.0:
        raise DegenerateError("defender on the bounding hyperplane: PBS degenerates")
    basis = _hyperplane_basis(a)
    w = np.asarray(offset, dtype=float) @ basis
    g2 = cfg.gamma**2
    h = cfg.gamma * abs(h_P) * math.sqrt(1.0 + (w @ w) / ((1.0 - g2) * h_P**2))
    foot = x_P0 - h_P * a
    return foot + w + h * a


def sample_pbs_analytic(target: TargetSet, x_P0, cfg: GameConfig, resolution: int, extent: float = 2.0) -> PbsMesh:
    """Grid samples of the closed-form PBS (singleton, half-space, ball).

    Half-space offsets span ``extent * |h_P|`` around the defender's foot.
    """
    x_P0 = as_point(x_P0, cfg.dim)
    if resolution < 1:
        raise ValidationError("resolution must be at least 1")
    if isinstance(target, HalfSpace):
        L = extent * abs(target.height(x_P0))
        if cfg.dim == 2:
            w = np.linspace(-L, L, resolution) if resolution > 1 else np.zeros(1)
            pts = [halfspace_pbs_point(target, x_P0, cfg, [wk]) for wk in w]
            return PbsMesh(np.array(pts), (resolution,), periodic=False)
        if cfg.dim == 3:
            radii = np.linspace(0.0, L, resolution) if resolution > 1 else np.zeros(1)
            ang = 2.0 * np.pi * np.arange(resolution) / resolution
            pts = [halfspace_pbs_point(target, x_P0, cfg, [rr * math.cos(t), rr * math.sin(t)]) for rr in radii for t in ang]
            return PbsMesh(np.array(pts), (resolution, resolution), periodic=True)
        raise ValidationError(f"surface sampling supports dimensions 2 and 3, got {cfg.dim}")
    if not isinstance(target, (Singleton, NormBall)):
        raise ValidationError(f"no closed-form PBS for {target.kind} targets")
    dirs, shape = sphere_directions(cfg.dim, resolution)
    pts = np.array([_analytic_point(target, x_P0, cfg, u) for u in dirs])
    return PbsMesh(pts, shape, periodic=True)


# ---------------------------------------------------------------------------
# boundary-to-PBS transformation
# ---------------------------------------------------------------------------


def _quadratic_coefficients(p, grad, x_P0, gamma):
    d = x_P0 - p
    g2 = gamma**2
    a = float(grad @ grad)
    b = 2.0 * g2 * float(d @ grad)
    c = -g2 * (1.0 - g2) * float(d @ d)
    return a, b, c


def xi_plus(p, grad, x_P0, cfg: GameConfig) -> float:
    """Unique positive root of |g|^2 xi^2 + 2 gamma^2 <x_P0 - p, g> xi
    - gamma^2 (1 - gamma^2) |x_P0 - p|^2 = 0."""
    p = as_point(p, cfg.dim)
    grad = as_point(grad, cfg.dim)
    x_P0 = as_point(x_P0, cfg.dim)
    a, b, c = _quadratic_coefficients(p, grad, x_P0, cfg.gamma)
    if a == 0.0:
        raise DegenerateError("boundary gradient vanishes")
    if c == 0.0:
        raise DegenerateError("defender coincides with the boundary point")
    root = math.sqrt(b * b - 4.0 * a * c)
    # avoid cancellation: pick the formula whose denominator adds like signs
    if b >= 0.0:
        return -2.0 * c / (b + root)
    return (-b + root) / (2.0 * a)


def map_closed_form(p, grad, x_P0, cfg: GameConfig) -> np.ndarray:
    """Single-expression form of the boundary-to-PBS map (cross-check)."""
    p = as_point(p, cfg.dim)
    grad = as_point(grad, cfg.dim)
    x_P0 = as_point(x_P0, cfg.dim)
    gam = cfg.gamma
    g2 = gam**2
    k = float((x_P0 - p) @ grad)
    gg = float(grad @ grad)
    dd = float((x_P0 - p) @ (x_P0 - p))
    bracket = -g2 * k + gam * math.sqrt(g2 * k * k + (1.0 - g2) * gg * dd)
    return g2 * x_P0 + (1.0 - g2) * p + grad / gg * bracket


def map_boundary_to_pbs(p, target: TargetSet, x_P0, cfg: GameConfig) -> PbsSample:
    """Image of the boundary point ``p`` on the PBS of ``target``."""
    p = as_point(p, cfg.dim)
    x_P0 = as_point(x_P0, cfg.dim)
    if not target.has_smooth_boundary:
        raise ValidationError(f"{target.kind} target has no smooth boundary")
    grad = target.boundary_gradient(p)
    xi = xi_plus(p, grad, x_P0, cfg)
    g2 = cfg.gamma**2
    x_E = grad * xi + g2 * x_P0 + (1.0 - g2) * p
    valid = not target.contains(x_E, 0.0)
    return PbsSample(p, xi, x_E, valid)


def sample_pbs_mesh(target: TargetSet, x_P0, cfg: GameConfig, resolution: int) -> PbsMesh:
    """Ray-cast the target boundary on a sphere grid and map every node.

    Failed nodes are recorded in ``failures`` and left as NaN rows.
    """
    x_P0 = as_point(x_P0, cfg.dim)
    if not target.has_smooth_boundary or isinstance(target, HalfSpace):
        raise ValidationError(f"boundary meshing needs a bounded smooth target, got {target.kind}")
    dirs, shape = sphere_directions(cfg.dim, resolution)
    pts = np.full((len(dirs), cfg.dim), np.nan)
    samples: List[Optional[PbsSample]] = []
    failures = []
    for i, u in enumerate(dirs):
        try:
            p = target.ray_to_boundary(u, steps=RAY_BISECTION_STEPS)
            smp = map_boundary_to_pbs(p, target, x_P0, cfg)
        except GameError as exc:
            failures.append((i, str(exc)))
            samples.append(None)
            continue
        samples.append(smp)
        pts[i] = smp.pbs_point
    return PbsMesh(pts, shape, periodic=True, samples=samples, failures=failures)


def barrier_at(target: TargetSet, x_P0, cfg: GameConfig, x_E0) -> float:
    return barrier(cfg, GameState(x_P0, x_E0), target).value
