"""Closed convex target sets.

Every set exposes membership, Euclidean projection and distance.  The
singleton, half-space and norm ball use closed forms; the ellipsoid solves
the scalar KKT equation for its multiplier with a safeguarded Newton
iteration; polytopes use Dykstra's alternating projections; smooth level
sets {F <= 0} use a projected-gradient descent over the boundary surface
(Barzilai-Borwein trial steps, Armijo backtracking).

Sets that have a smooth boundary description also provide the implicit
function ``level(z)`` (F) and ``boundary_gradient(p)`` (grad F).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateError, DimensionError, SolverError, ValidationError

TAU_MEM = 1e-9
TAU_BND = 1e-8
TAU_PROJ_EXACT = 1e-10
TAU_PROJ_ITER = 1e-8
NEWTON_MAX_ITER = 200
PG_MAX_ITER = 10_000
DYKSTRA_MAX_ITER = 10_000


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D point, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[0]}")
    return arr


def _as_points(X, dim: int) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionError(f"expected an (m, {dim}) array, got shape {arr.shape}")
    return arr


class TargetSet:
    """Common interface of the target-set variants."""

    kind = "abstract"
    has_smooth_boundary = False

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def anchor(self) -> np.ndarray:
        """A point of the set used as the origin for ray casting."""
        raise NotImplementedError

    def contains(self, z, tol: float = TAU_MEM) -> bool:
        raise NotImplementedError

    def contains_many(self, Z, tol: float = TAU_MEM) -> np.ndarray:
        Z = _as_points(Z, self.dim)
        return np.array([self.contains(z, tol) for z in Z], dtype=bool)

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def project_many(self, X) -> np.ndarray:
        X = _as_points(X, self.dim)
        if len(X) == 0:
            return X.copy()
        return np.vstack([self.project(x) for x in X])

    def distance(self, x) -> float:
        x = as_point(x, self.dim)
        if self.contains(x, 0.0):
            return 0.0
        return float(np.linalg.norm(x - self.project(x)))

    def level(self, z) -> float:
        raise ValidationError(f"{self.kind} target has no smooth boundary function")

    def _raw_gradient(self, z) -> np.ndarray:
        raise ValidationError(f"{self.kind} target has no smooth boundary function")

    def boundary_gradient(self, p, tol: float = TAU_BND) -> np.ndarray:
        """Gradient of the boundary function at a boundary point ``p``."""
        p = as_point(p, self.dim)
        value = self.level(p)
        if abs(value) > tol:
            raise ValidationError(f"point is not on the boundary (|F(p)| = {abs(value):.3e})")
        g = np.asarray(self._raw_gradient(p), dtype=float)
        if not np.all(np.isfinite(g)) or np.linalg.norm(g) == 0.0:
            raise DegenerateError("boundary gradient vanishes")
        return g

    def ray_to_boundary(self, direction, max_doublings: int = 200, steps: int = 80) -> np.ndarray:
        """Boundary point hit by the ray from ``anchor`` along ``direction``.

        Bisection on F along the ray; requires F(anchor) < 0 and a bounded set
        along that direction.
        """
        u = as_point(direction, self.dim)
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise DegenerateError("zero ray direction")
        u = u / norm
        a = self.anchor
        if self.level(a) >= 0.0:
            raise SolverError("ray anchor is not interior", self.level(a))
        lo, hi = 0.0, 1.0
        for _ in range(max_doublings):
            if self.level(a + hi * u) > 0.0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise SolverError("ray does not leave the set", hi)
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            if self.level(a + mid * u) > 0.0:
                hi = mid
            else:
                lo = mid
        return a + 0.5 * (lo + hi) * u

    def to_dict(self) -> dict:
        raise ValidationError(f"{self.kind} target is not serializable")


# ---------------------------------------------------------------------------
# closed-form variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Singleton(TargetSet):
    point: np.ndarray
    kind = "singleton"

    def __post_init__(self):
        object.__setattr__(self, "point", as_point(self.point))

    @property
    def dim(self):
        return self.point.shape[0]

    @property
    def anchor(self):
        return self.point.copy()

    def contains(self, z, tol=TAU_MEM):
        z = as_point(z, self.dim)
        return bool(np.linalg.norm(z - self.point) <= tol)

    def contains_many(self, Z, tol=TAU_MEM):
        Z = _as_points(Z, self.dim)
        return np.linalg.norm(Z - self.point, axis=1) <= tol

    def project(self, x):
        as_point(x, self.dim)
        return self.point.copy()

    def project_many(self, X):
        X = _as_points(X, self.dim)
        return np.tile(self.point, (len(X), 1))

    def to_dict(self):
        return {"type": "singleton", "point": self.point.tolist()}


@dataclass(frozen=True, eq=False)
class HalfSpace(TargetSet):
    """The set {z : <normal, z> <= offset}; the normal is stored with unit norm."""

    normal: np.ndarray
    offset: float
    kind = "half_space"
    has_smooth_boundary = True

    def __post_init__(self):
        a = as_point(self.normal)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValidationError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", a / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)

    @property
    def dim(self):
        return self.normal.shape[0]

    @property
    def anchor(self):
        return self.normal * (self.offset - 1.0)

    def height(self, z) -> float:
        """Signed distance of ``z`` from the bounding hyperplane (positive outside)."""
        return float(self.normal @ as_point(z, self.dim) - self.offset)

    def contains(self, z, tol=TAU_MEM):
        return self.height(z) <= tol

    def contains_many(self, Z, tol=TAU_MEM):
        Z = _as_points(Z, self.dim)
        return Z @ self.normal - self.offset <= tol

    def project(self, x):
        x = as_point(x, self.dim)
        h = self.normal @ x - self.offset
        return x - max(h, 0.0) * self.normal

    def project_many(self, X):
        X = _as_points(X, self.dim)
        h = np.maximum(X @ self.normal - self.offset, 0.0)
        return X - h[:, None] * self.normal

    def level(self, z):
        return self.height(z)

    def _raw_gradient(self, z):
        return self.normal.copy()

    def to_dict(self):
        return {"type": "half_space", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class NormBall(TargetSet):
    center: np.ndarray
    radius: float
    kind = "ball"
    has_smooth_boundary = True

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0.0:
            raise ValidationError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def anchor(self):
        return self.center.copy()

    def contains(self, z, tol=TAU_MEM):
        z = as_point(z, self.dim)
        return bool(np.linalg.norm(z - self.center) <= self.radius + tol)

    def contains_many(self, Z, tol=TAU_MEM):
        Z = _as_points(Z, self.dim)
        return np.linalg.norm(Z - self.center, axis=1) <= self.radius + tol

    def project(self, x):
        x = as_point(x, self.dim)
        d = x - self.center
        norm = np.linalg.norm(d)
        if norm <= self.radius:
            return x.copy()
        return self.center + self.radius * d / norm

    def project_many(self, X):
        X = _as_points(X, self.dim)
        d = X - self.center
        norm = np.linalg.norm(d, axis=1)
        scale = np.where(norm > self.radius, self.radius / np.where(norm > 0, norm, 1.0), 1.0)
        return self.center + d * scale[:, None]

    def level(self, z):
        d = as_point(z, self.dim) - self.center
        return float(d @ d - self.radius**2)

    def _raw_gradient(self, z):
        return 2.0 * (as_point(z, self.dim) - self.center)

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


# ---------------------------------------------------------------------------
# ellipsoid
# ---------------------------------------------------------------------------


def _ellipsoid_multipliers(Y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """KKT multipliers for projecting local-frame rows ``Y`` (all outside) onto
    the axis-aligned ellipsoid with semi-axes ``s``.

    Solves q(lam) = 1 with q(lam) = ||s*y / (s**2 + lam)||; Newton is applied
    to 1 - 1/q (decreasing in lam), which is exactly linear for one active axis, and safeguarded
    by bisection on a shrinking bracket.
    """
    s2 = s * s
    ynorm = np.linalg.norm(Y, axis=1)
    lo = np.maximum(0.0, s.min() * ynorm - s2.max())
    hi = np.maximum(s.max() * ynorm - s2.min(), lo)
    lam = lo.copy()
    active = np.ones(len(Y), dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        L = lam[active][:, None]
        w = s * Y[active] / (s2 + L)
        q = np.linalg.norm(w, axis=1)
        psi = 1.0 - 1.0 / q
        dpsi = -np.sum(w * w / (s2 + L), axis=1) / q**3
        lam_a, lo_a, hi_a = lam[active], lo[active], hi[active]
        lo_a = np.where(psi > 0.0, np.maximum(lo_a, lam_a), lo_a)
        hi_a = np.where(psi < 0.0, np.minimum(hi_a, lam_a), hi_a)
        step = psi / dpsi
        new = lam_a - step
        outside = (new <= lo_a) | (new >= hi_a) | ~np.isfinite(new)
        new = np.where(outside, 0.5 * (lo_a + hi_a), new)
        converged = np.abs(psi) <= 4e-16
        new = np.where(converged, lam_a, new)
        done = converged | (np.abs(new - lam_a) <= 1e-15 * (1.0 + lam_a))
        lam[active], lo[active], hi[active] = new, lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            return lam
    w = s * Y / (s2 + lam[:, None])
    raise SolverError("ellipsoid projection did not converge", float(np.max(np.abs(np.linalg.norm(w, axis=1) - 1.0))))


def _ellipsoid_multiplier_scalar(y, s) -> float:
    """Single-point version of :func:`_ellipsoid_multipliers` on Python
    floats; avoids array overhead in tight optimization loops."""
    s2 = [si * si for si in s]
    ynorm = math.sqrt(sum(yi * yi for yi in y))
    lo = max(0.0, min(s) * ynorm - max(s2))
    hi = max(max(s) * ynorm - min(s2), lo)
    lam = lo
    for _ in range(NEWTON_MAX_ITER):
        w = [si * yi / (s2i + lam) for si, yi, s2i in zip(s, y, s2)]
        q = math.sqrt(sum(wi * wi for wi in w))
        psi = 1.0 - 1.0 / q
        dpsi = -sum(wi * wi / (s2i + lam) for wi, s2i in zip(w, s2)) / q**3
        if psi > 0.0:
            lo = max(lo, lam)
        elif psi < 0.0:
            hi = min(hi, lam)
        if abs(psi) <= 4e-16:
            return lam
        new = lam - psi / dpsi
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - lam) <= 1e-15 * (1.0 + lam):
            return new
        lam = new
    raise SolverError("ellipsoid projection did not converge", abs(q - 1.0))


@dataclass(frozen=True, eq=False)
class Ellipsoid(TargetSet):
    """{c + R y : sum((y_i / s_i)**2) <= 1} with orthogonal ``rotation`` R."""

    semi_axes: np.ndarray
    center: Optional[np.ndarray] = None
    rotation: Optional[np.ndarray] = None
    kind = "ellipsoid"
    has_smooth_boundary = True

    def __post_init__(self):
        s = as_point(self.semi_axes)
        if np.any(s <= 0.0):
            raise ValidationError("ellipsoid semi-axes must be positive")
        n = s.shape[0]
        c = np.zeros(n) if self.center is None else as_point(self.center, n)
        R = np.eye(n) if self.rotation is None else np.asarray(self.rotation, dtype=float)
        if R.shape != (n, n) or not np.allclose(R.T @ R, np.eye(n), atol=1e-9):
            raise ValidationError("ellipsoid rotation must be an orthogonal n x n matrix")
        object.__setattr__(self, "semi_axes", s)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "rotation", R)

    @property
    def dim(self):
        return self.semi_axes.shape[0]

    @property
    def anchor(self):
        return self.center.copy()

    def _local(self, Z):
        return (Z - self.center) @ self.rotation

    def contains(self, z, tol=TAU_MEM):
        return self.level(z) <= tol

    def contains_many(self, Z, tol=TAU_MEM):
        Y = self._local(_as_points(Z, self.dim))
        return np.sum((Y / self.semi_axes) ** 2, axis=1) - 1.0 <= tol

    def project(self, x):
        return self.project_many(as_point(x, self.dim)[None, :])[0]

    def project_many(self, X):
        X = _as_points(X, self.dim)
        Y = self._local(X)
        s = self.semi_axes
        out = X.copy()
        outside = np.sum((Y / s) ** 2, axis=1) > 1.0
        if outside.any():
            Yo = Y[outside]
            if len(Yo) <= 16:
                s_list = s.tolist()
                lam = np.array([_ellipsoid_multiplier_scalar(y, s_list) for y in Yo.tolist()])
            else:
                lam = _ellipsoid_multipliers(Yo, s)
            Z = (s * s) * Yo / (s * s + lam[:, None])
            out[outside] = self.center + Z @ self.rotation.T
        return out

    def level(self, z):
        y = self._local(as_point(z, self.dim))
        return float(np.sum((y / self.semi_axes) ** 2) - 1.0)

    def _raw_gradient(self, z):
        y = self._local(as_point(z, self.dim))
        return self.rotation @ (2.0 * y / self.semi_axes**2)

    def to_dict(self):
        d = {"type": "ellipsoid", "semi_axes": self.semi_axes.tolist(), "center": self.center.tolist()}
        if not np.array_equal(self.rotation, np.eye(self.dim)):
            d["rotation"] = self.rotation.tolist()
        return d


# ---------------------------------------------------------------------------
# polytope
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polytope(TargetSet):
    """H-representation {z : A z <= b}; rows are normalized on construction."""

    A: np.ndarray
    b: np.ndarray
    kind = "polytope"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValidationError("polytope A and b have mismatched row counts")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0.0):
            raise ValidationError("polytope rows must be nonzero")
        A, b = A / norms[:, None], b / norms
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_interior", self._find_interior())

    def _find_interior(self):
        # Chebyshev center: maximize r s.t. A z + r <= b.
        from scipy.optimize import linprog

        m, n = self.A.shape
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        A_ub = np.hstack([self.A, np.ones((m, 1))])
        res = linprog(cost, A_ub=A_ub, b_ub=self.b, bounds=[(None, None)] * n + [(0.0, 1e6)])
        if res.status != 0 or res.x[-1] < 0.0:
            raise ValidationError("polytope is empty")
        return res.x[:n]

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def anchor(self):
        return self._interior.copy()

    def contains(self, z, tol=TAU_MEM):
        z = as_point(z, self.dim)
        return bool(np.max(self.A @ z - self.b) <= tol)

    def contains_many(self, Z, tol=TAU_MEM):
        Z = _as_points(Z, self.dim)
        return np.max(Z @ self.A.T - self.b, axis=1) <= tol

    def project(self, x):
        x = as_point(x, self.dim)
        if self.contains(x, 0.0):
            return x.copy()
        z = x.copy()
        incr = np.zeros_like(self.A)
        for _ in range(DYKSTRA_MAX_ITER):
            prev = z.copy()
            for i, (a, b) in enumerate(zip(self.A, self.b)):
                y = z + incr[i]
                z = y - max(a @ y - b, 0.0) * a
                incr[i] = y - z
            viol = float(np.max(self.A @ z - self.b))
            if np.linalg.norm(z - prev) <= 1e-13 * (1.0 + np.linalg.norm(z)) and viol <= 1e-11:
                return z
        raise SolverError("Dykstra projection did not converge", float(np.linalg.norm(z - prev)))

    def to_dict(self):
        return {"type": "polytope", "A": self.A.tolist(), "b": self.b.tolist()}


# ---------------------------------------------------------------------------
# smooth level set
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SmoothLevelSet(TargetSet):
    """{z : F(z) <= 0} for a caller-supplied convex F with gradient ``grad``.

    ``interior`` must satisfy F(interior) < 0; it anchors the radial
    boundary parameterization used by the projection and by meshing.
    ``description`` is an optional JSON-able dict used for serialization.
    """

    F: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    interior: np.ndarray
    description: Optional[dict] = field(default=None)
    kind = "smooth_level_set"
    has_smooth_boundary = True

    def __post_init__(self):
        a = as_point(self.interior)
        object.__setattr__(self, "interior", a)
        if not self.F(a) < 0.0:
            raise ValidationError("interior point must satisfy F < 0")

    @property
    def dim(self):
        return self.interior.shape[0]

    @property
    def anchor(self):
        return self.interior.copy()

    def level(self, z):
        return float(self.F(as_point(z, self.dim)))

    def _raw_gradient(self, z):
        return np.asarray(self.grad(as_point(z, self.dim)), dtype=float)

    def contains(self, z, tol=TAU_MEM):
        return self.level(z) <= tol

    def _radial_boundary(self, direction):
        """Boundary point on the ray anchor + r*u; Newton from the outside,
        safeguarded by bisection (F is convex along the ray)."""
        a = self.interior
        u = direction / np.linalg.norm(direction)
        lo, hi = 0.0, 1.0
        for _ in range(200):
            if self.F(a + hi * u) > 0.0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise SolverError("ray does not leave the level set", hi)
        r = hi
        for _ in range(NEWTON_MAX_ITER):
            z = a + r * u
            f = self.F(z)
            if f > 0.0:
                hi = r
            else:
                lo = r
            slope = float(np.dot(self.grad(z), u))
            new = r - f / slope if slope > 0.0 else 0.5 * (lo + hi)
            if not lo <= new <= hi:
                new = 0.5 * (lo + hi)
            if abs(new - r) <= 1e-15 * (1.0 + r) or hi - lo <= 1e-15 * (1.0 + hi):
                return a + new * u
            r = new
        raise SolverError("radial boundary search did not converge", abs(self.F(a + r * u)))

    def project(self, x):
        x = as_point(x, self.dim)
        if self.F(x) <= 0.0:
            return x.copy()
        z = self._radial_boundary(x - self.interior)
        r = z - x
        f = 0.5 * float(r @ r)
        scale = 1.0 + np.linalg.norm(x - self.interior)
        t = 1.0
        z_prev = d_prev = None
        for _ in range(PG_MAX_ITER):
            g = np.asarray(self.grad(z), dtype=float)
            nrm = np.linalg.norm(g)
            if nrm == 0.0:
                raise DegenerateError("level-set gradient vanishes on the boundary")
            n = g / nrm
            # descent direction: minus the tangential part of grad 0.5|z - x|^2
            d = -(r - (r @ n) * n)
            dd = float(d @ d)
            if math.sqrt(dd) <= 1e-12 * scale:
                return z
            if z_prev is not None:
                sk = z - z_prev
                yk = d_prev - d
                sy = float(sk @ yk)
                if sy > 0.0:
                    t = min(max(float(sk @ sk) / sy, 1e-10), 1e6)
            while True:
                z_new = self._radial_boundary(z + t * d - self.interior)
                r_new = z_new - x
                f_new = 0.5 * float(r_new @ r_new)
                if f_new <= f - 1e-4 * t * dd:
                    break
                t *= 0.5
                if t < 1e-20:
                    if math.sqrt(dd) <= TAU_PROJ_ITER * scale:
                        return z
                    raise SolverError("level-set projection stalled", math.sqrt(dd))
            if f_new >= f and math.sqrt(dd) <= TAU_PROJ_ITER * scale:
                # round-off floor: no representable decrease left
                return z
            z_prev, d_prev = z, d
            z, r, f = z_new, r_new, f_new
        raise SolverError("level-set projection hit the iteration cap", math.sqrt(dd))

    def to_dict(self):
        if self.description is None:
            raise ValidationError("smooth level set has no serializable description")
        return dict(self.description)


def p_norm_ball(p: int, radius: float = 1.0, center=None, dim: int = 3) -> SmoothLevelSet:
    """{z : sum(|z_i - c_i|**p) <= radius**p} for even p >= 2.

    p = 4, radius 1 in 3-D is the quartic cube x^4 + y^4 + z^4 <= 1.
    """
    if p < 2 or p % 2:
        raise ValidationError("p must be an even integer >= 2")
    if not radius > 0.0:
        raise ValidationError("radius must be positive")
    c = np.zeros(dim) if center is None else as_point(center)
    rp = float(radius) ** p

    def F(z):
        return float(np.sum((z - c) ** p) - rp)

    def grad(z):
        return p * (z - c) ** (p - 1)

    desc = {"type": "p_norm_ball", "p": p, "radius": float(radius), "center": c.tolist()}
    return SmoothLevelSet(F, grad, c, description=desc)


def ball_level_set(center, radius: float) -> SmoothLevelSet:
    """A norm ball given only through F(z) = ||z - c||^2 - r^2 (no closed form)."""
    c = as_point(center)
    r2 = float(radius) ** 2

    def F(z):
        d = z - c
        return float(d @ d - r2)

    def grad(z):
        return 2.0 * (z - c)

    desc = {"type": "p_norm_ball", "p": 2, "radius": float(radius), "center": c.tolist()}
    return SmoothLevelSet(F, grad, c, description=desc)


_TARGET_KEYS = {
    "singleton": ({"point"}, set()),
    "half_space": ({"normal", "offset"}, set()),
    "ball": ({"radius"}, {"center"}),
    "ellipsoid": ({"semi_axes"}, {"center", "rotation"}),
    "polytope": ({"A", "b"}, set()),
    "p_norm_ball": ({"p", "radius"}, {"center"}),
}


def target_from_dict(d: dict, dim: Optional[int] = None) -> TargetSet:
    """Build a target set from its JSON description."""
    if not isinstance(d, dict) or "type" not in d:
        raise ValidationError("target must be an object with a 'type' key")
    kind = d["type"]
    if kind not in _TARGET_KEYS:
        raise ValidationError(f"unknown target type {kind!r}")
    required, optional = _TARGET_KEYS[kind]
    keys = set(d) - {"type"}
    missing = required - keys
    if missing:
        raise ValidationError(f"target {kind!r} is missing {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise ValidationError(f"target {kind!r} has unknown keys {sorted(unknown)}")

    if kind == "singleton":
        target = Singleton(d["point"])
    elif kind == "half_space":
        target = HalfSpace(d["normal"], d["offset"])
    elif kind == "ball":
        n = dim if dim is not None else len(d.get("center", []))
        target = NormBall(d.get("center", np.zeros(n)), d["radius"])
    elif kind == "ellipsoid":
        target = Ellipsoid(d["semi_axes"], d.get("center"), d.get("rotation"))
    elif kind == "polytope":
        target = Polytope(d["A"], d["b"])
    else:
        center = d.get("center")
        n = len(center) if center is not None else dim
        if n is None:
            raise ValidationError("p_norm_ball needs a center or a known dimension")
        target = p_norm_ball(int(d["p"]), d["radius"], center, dim=n)
    if dim is not None and target.dim != dim:
        raise DimensionError(f"target has dimension {target.dim}, expected {dim}")
    return target
