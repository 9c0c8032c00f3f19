"""Obstacles, line-of-sight tests and visibility horizons in the plane.

Three obstacle classes are supported:

* :class:`Circle` -- closed-form horizons.
* :class:`ConvexArc` -- a sampled, uniformly convex boundary arc
  ``Sigma: [-L, L] -> R^2`` traversed counter-clockwise (interior on the
  left).  The obstacle is the convex hull of the arc.
* :class:`ConvexPolygon` -- counter-clockwise vertices; horizons are corners.

Orientation convention: the *lower* horizon of a vantage point is the
clockwise end of the visible part of the boundary, the *upper* horizon its
counter-clockwise end.  On a ``ConvexArc`` the vantage sees ``(s_lower, s_upper)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

# Gauss-Legendre nodes on [0, 1] used to integrate the arc between samples.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

TANGENCY_RTOL = 1e-12


def vec(x: float, y: float) -> np.ndarray:
    """Return a 2-vector as a float array."""
    v = np.array([float(x), float(y)])
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite point ({x}, {y})")
    return v


def as_vec(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(2)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p}")
    return p


def cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


class GeometryError(ValueError):
    """Raised when a geometric precondition fails (inside obstacle, off-arc horizon...)."""


# ---------------------------------------------------------------------------
# obstacle types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Circle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("circle radius must be positive and finite")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, p, strict: bool = True) -> bool:
        r = float(np.hypot(*(as_vec(p) - self.center)))
        return r < self.radius * (1 - 1e-12) if strict else r <= self.radius

    def distance(self, p) -> float:
        return max(0.0, float(np.hypot(*(as_vec(p) - self.center))) - self.radius)

    def transformed(self, R: np.ndarray, t) -> "Circle":
        return Circle(R @ self.center + as_vec(t), self.radius)


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2D vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite polygon vertex")
        e = np.roll(v, -1, axis=0) - v
        if np.any(np.hypot(e[:, 0], e[:, 1]) == 0):
            raise ValueError("repeated polygon vertex")
        turn = cross(e, np.roll(e, -1, axis=0))
        if not np.all(turn > 0):
            raise ValueError("polygon vertices must be strictly convex and counter-clockwise")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def outward_normals(self) -> np.ndarray:
        e = self.edges
        n = np.stack([e[:, 1], -e[:, 0]], axis=1)
        return n / np.hypot(n[:, 0], n[:, 1])[:, None]

    @property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.max(np.hypot(d[..., 0], d[..., 1])))

    def contains(self, p, strict: bool = True) -> bool:
        p = as_vec(p)
        side = np.einsum("ij,ij->i", self.outward_normals, p - self.vertices)
        tol = TANGENCY_RTOL * self.diameter
        return bool(np.all(side < -tol)) if strict else bool(np.all(side <= tol))

    def distance(self, p) -> float:
        p = as_vec(p)
        if self.contains(p, strict=False):
            return 0.0
        return float(np.min(_point_segment_distance(p, self.vertices, np.roll(self.vertices, -1, axis=0))))

    def transformed(self, R: np.ndarray, t) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices @ R.T + as_vec(t))


@dataclass(frozen=True)
class ConvexArc:
    """Sampled convex arc with linearly interpolated curvature.

    ``s``, ``points``, ``tangents``, ``normals``, ``kappa`` hold the sample
    table.  Between samples the tangent angle is the exact integral of the
    piecewise-linear curvature and positions are integrated by Gauss-Legendre
    quadrature, so the interpolated curve is consistent with ``curvature_at``.
    """

    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    kappa: np.ndarray
    L: float
    kappa0: float
    C_L: float
    angles: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        tg = np.asarray(self.tangents, dtype=float)
        nm = np.asarray(self.normals, dtype=float)
        k = np.asarray(self.kappa, dtype=float)
        L = float(self.L)
        if not L > 0:
            raise ValueError("arc half-length L must be positive")
        if len(s) < 2 or not np.all(np.diff(s) > 0):
            raise ValueError("arc samples must be strictly increasing in s")
        if abs(s[0] + L) > 1e-12 * L or abs(s[-1] - L) > 1e-12 * L:
            raise ValueError("arc samples must cover [-L, L]")
        if np.max(np.diff(s)) > 1e-3 * L * (1 + 1e-9):
            raise ValueError("arc sample spacing must not exceed 1e-3 * L")
        if not self.kappa0 > 0 or np.any(k < self.kappa0 * (1 - 1e-12)):
            raise ValueError("curvature table falls below kappa0")
        slopes = np.abs(np.diff(k)) / np.diff(s)
        if np.any(slopes > self.C_L * (1 + 1e-9) + 1e-12):
            raise ValueError("curvature table violates the Lipschitz constant C_L")
        if np.max(np.abs(np.einsum("ij,ij->i", tg, nm))) > 1e-9:
            raise ValueError("tangent and normal must be orthogonal")
        # outward normal is the clockwise rotation of the (counter-clockwise) tangent
        if np.any(np.abs(nm - np.stack([tg[:, 1], -tg[:, 0]], axis=1)) > 1e-9):
            raise ValueError("normals must point out of the obstacle (right of the tangent)")
        ang = np.unwrap(np.arctan2(tg[:, 1], tg[:, 0]))
        for name, arr in (("s", s), ("points", pts), ("tangents", tg), ("normals", nm), ("kappa", k), ("angles", ang)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "_s_list", s.tolist())
        object.__setattr__(self, "_hull", None)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_curvature(cls, kappa_fn, L: float, start_point, start_angle: float, n: int | None = None,
                       C_L: float | None = None) -> "ConvexArc":
        """Integrate a curvature profile ``kappa_fn(s)`` into a sample table.

        ``start_point``/``start_angle`` give ``Sigma(0)`` and its tangent angle.
        """
        from scipy.integrate import solve_ivp

        n = max(n or 2001, 2001)
        s = np.linspace(-L, L, n)
        p0 = as_vec(start_point)

        def rhs(_s, y):
            return [kappa_fn(_s), math.cos(y[0]), math.sin(y[0])]

        halves = []
        for grid in (s[s >= 0], s[s <= 0][::-1]):
            sol = solve_ivp(rhs, (0.0, grid[-1]), [start_angle, p0[0], p0[1]], t_eval=grid,
                            method="DOP853", rtol=1e-13, atol=1e-14)
            halves.append(sol.y.T)
        y = np.vstack([halves[1][::-1][:-1], halves[0]])
        ang, pts = y[:, 0], y[:, 1:]
        tg = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        nm = np.stack([tg[:, 1], -tg[:, 0]], axis=1)
        k = np.array([kappa_fn(x) for x in s], dtype=float)
        if C_L is None:
            C_L = float(np.max(np.abs(np.diff(k)) / np.diff(s)))
        return cls(s, pts, tg, nm, k, L, float(np.min(k)), C_L)

    @classmethod
    def from_circle(cls, center, radius: float, anchor_angle: float, L: float, n: int = 2001) -> "ConvexArc":
        """Arc of a circle centred on the boundary point at polar angle ``anchor_angle``."""
        c = as_vec(center)
        s = np.linspace(-L, L, n)
        phi = anchor_angle + s / radius
        pts = c + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        tg = np.stack([-np.sin(phi), np.cos(phi)], axis=1)
        nm = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        k = np.full(n, 1.0 / radius)
        return cls(s, pts, tg, nm, k, L, 1.0 / radius, 0.0)

    # -- evaluation ---------------------------------------------------------

    @property
    def kappa_max(self) -> float:
        return float(np.max(self.kappa))

    @property
    def diameter(self) -> float:
        h = self.hull
        d = h[:, None, :] - h[None, :, :]
        return float(np.max(np.hypot(d[..., 0], d[..., 1])))

    def _locate(self, s: float) -> int:
        if not (-self.L * (1 + 1e-12) <= s <= self.L * (1 + 1e-12)):
            raise GeometryError(f"arclength {s} outside [-L, L] = [{-self.L}, {self.L}]")
        i = bisect.bisect_right(self._s_list, s) - 1
        return min(max(i, 0), len(self._s_list) - 2)

    def curvature_at(self, s: float) -> float:
        i = self._locate(s)
        s0, s1 = self._s_list[i], self._s_list[i + 1]
        w = (s - s0) / (s1 - s0)
        return float((1 - w) * self.kappa[i] + w * self.kappa[i + 1])

    def _angle(self, i: int, u):
        # tangent angle at s_i + u for the piecewise-linear curvature
        k0 = self.kappa[i]
        dk = (self.kappa[i + 1] - k0) / (self._s_list[i + 1] - self._s_list[i])
        return self.angles[i] + k0 * u + 0.5 * dk * u * u

    def frame(self, s: float):
        """Return ``(point, tangent, normal)`` at arclength ``s``."""
        i = self._locate(s)
        u = s - self._s_list[i]
        a = float(self._angle(i, u))
        if u == 0.0:
            p = self.points[i]
        else:
            angs = self._angle(i, u * _GL_X)
            p = self.points[i] + u * np.array([np.dot(_GL_W, np.cos(angs)), np.dot(_GL_W, np.sin(angs))])
        ca, sa = math.cos(a), math.sin(a)
        return p, np.array([ca, sa]), np.array([sa, -ca])

    def point(self, s: float) -> np.ndarray:
        return self.frame(s)[0]

    def normal(self, s: float) -> np.ndarray:
        return self.frame(s)[2]

    @property
    def hull(self) -> np.ndarray:
        """Counter-clockwise polygon of the arc samples (arc + closing chord)."""
        if self._hull is None:
            object.__setattr__(self, "_hull", np.ascontiguousarray(self.points))
        return self._hull

    def contains(self, p, strict: bool = True) -> bool:
        return _polygon_contains(self.hull, as_vec(p), strict, self.diameter)

    def distance(self, p) -> float:
        p = as_vec(p)
        if self.contains(p, strict=False):
            return 0.0
        h = self.hull
        return float(np.min(_point_segment_distance(p, h, np.roll(h, -1, axis=0))))

    def transformed(self, R: np.ndarray, t) -> "ConvexArc":
        t = as_vec(t)
        return ConvexArc(self.s, self.points @ R.T + t, self.tangents @ R.T, self.normals @ R.T,
                         self.kappa, self.L, self.kappa0, self.C_L)


Obstacle = Union[Circle, ConvexArc, ConvexPolygon]


@dataclass(frozen=True)
class HorizonData:
    """Both visibility horizons of one vantage point.

    ``s_lower``/``s_upper`` are arclength parameters (polar angle times
    radius for a circle, ``nan`` for a polygon).  For polygons the horizon
    vertex index is stored in ``lower_corner``/``upper_corner``.
    """

    vantage: np.ndarray
    x_lower: np.ndarray
    x_upper: np.ndarray
    s_lower: float
    s_upper: float
    d_lower: float
    d_upper: float
    kappa_lower: float
    kappa_upper: float
    lower_corner: int | None = None
    upper_corner: int | None = None


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = np.einsum("...i,...i->...", ab, ab)
    t = np.clip(np.einsum("...i,...i->...", p - a, ab) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    q = a + t[..., None] * ab
    return np.hypot(*(p - q).T) if np.ndim(q) == 1 else np.hypot(p[..., 0] - q[..., 0], p[..., 1] - q[..., 1])


def _polygon_contains(verts, p, strict, diam):
    e = np.roll(verts, -1, axis=0) - verts
    c = cross(e, p - verts) / np.hypot(e[:, 0], e[:, 1])
    tol = TANGENCY_RTOL * diam
    return bool(np.all(c > tol)) if strict else bool(np.all(c >= -tol))


def _scene_scale(a, b, obs) -> float:
    return max(obs.diameter, float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1.0)


def _check_outside(points, obs, what="point"):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    for p in pts:
        if obs.contains(p, strict=True):
            raise GeometryError(f"{what} {tuple(p)} lies inside the obstacle")


# ---------------------------------------------------------------------------
# line of sight
# ---------------------------------------------------------------------------


def segments_blocked(a, b, obs: Obstacle) -> np.ndarray:
    """Vectorised :func:`segment_blocked` over broadcast arrays ``a``, ``b`` of shape (..., 2).

    Touching the boundary does not block; the tolerance is
    ``1e-12 * scene diameter``.  Endpoints are not validated.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    tol = TANGENCY_RTOL * max(obs.diameter, 1.0)
    if isinstance(obs, Circle):
        d = _point_segment_distance(obs.center, a, b)
        return d < obs.radius - tol
    verts = obs.vertices if isinstance(obs, ConvexPolygon) else obs.hull
    return _segments_hit_convex(a, b, verts, tol)


def _segments_hit_convex(a, b, verts, tol):
    # Cyrus-Beck clipping of the open segment against the open polygon
    e = np.roll(verts, -1, axis=0) - verts
    n = np.stack([e[:, 1], -e[:, 0]], axis=1)
    n = n / np.hypot(n[:, 0], n[:, 1])[:, None]
    d = b - a
    # signed distance of a to each edge line (positive outside), (..., m)
    fa = np.einsum("...j,mj->...m", a, n) - np.einsum("mj,mj->m", verts, n)
    fd = np.einsum("...j,mj->...m", d, n)
    # inside the shrunk polygon: fa + t*fd < -tol for all edges
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t_hit = (-tol - fa) / fd
    enter = np.where(fd < 0, t_hit, -np.inf)
    leave = np.where(fd > 0, t_hit, np.inf)
    parallel_out = (fd == 0) & (fa >= -tol)
    t0 = np.maximum(np.max(enter, axis=-1), 0.0)
    t1 = np.minimum(np.min(leave, axis=-1), 1.0)
    return (t0 < t1) & ~np.any(parallel_out, axis=-1)


def segment_blocked(a, b, obs: Obstacle) -> bool:
    """True iff the open segment ``(a, b)`` meets the open obstacle.

    Raises :class:`GeometryError` if an endpoint lies strictly inside.
    """
    a, b = as_vec(a), as_vec(b)
    _check_outside([a, b], obs, "segment endpoint")
    return bool(segments_blocked(a, b, obs))


# ---------------------------------------------------------------------------
# horizons
# ---------------------------------------------------------------------------


def tangency_residual(s: float, vantage, arc: ConvexArc) -> float:
    """``(vantage - Sigma(s)) . n(s)``; zero where the line from vantage is tangent at ``Sigma(s)``.

    Positive values mean ``Sigma(s)`` faces the vantage point.
    """
    p, _, n = arc.frame(s)
    v = as_vec(vantage)
    return float((v[0] - p[0]) * n[0] + (v[1] - p[1]) * n[1])


def curvature_at(s: float, arc: ConvexArc) -> float:
    return arc.curvature_at(s)


def bisect_root(f, lo: float, hi: float, xtol: float, flo: float | None = None) -> float:
    """Plain bisection for a sign change of ``f`` on ``[lo, hi]``."""
    flo = f(lo) if flo is None else flo
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def arc_shifted_root(arc: ConvexArc, vantage, shift: float, side: str, cells: int = 64) -> float:
    """Solve ``tangency_residual(s) = shift`` on the given side of the visible interval.

    ``side='lower'`` picks the crossing where the residual increases,
    ``side='upper'`` the one where it decreases.  Bisection after bracketing
    on ``cells`` uniform cells, to ``1e-12 * L``.
    """
    v = as_vec(vantage)
    grid = np.linspace(-arc.L, arc.L, cells + 1)
    vals = [tangency_residual(x, v, arc) - shift for x in grid]
    want_up = side == "lower"
    for i in range(cells):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0 and (f1 > 0) == want_up and f1 != 0:
            return float(grid[i])
        if (f0 < 0 < f1 and want_up) or (f0 > 0 > f1 and not want_up):
            return bisect_root(lambda x: tangency_residual(x, v, arc) - shift, grid[i], grid[i + 1],
                               1e-12 * arc.L, flo=f0)
    if vals[-1] == 0.0:
        return float(grid[-1])
    raise GeometryError(f"{side} horizon from {tuple(v)} falls outside the arc [-L, L]")


def horizons(vantage, obs: Obstacle) -> HorizonData:
    """Both tangent points (visibility horizons) from ``vantage`` to ``obs``."""
    v = as_vec(vantage)
    if obs.contains(v, strict=False) and not isinstance(obs, ConvexPolygon):
        raise GeometryError(f"vantage {tuple(v)} is not strictly outside the obstacle")
    if isinstance(obs, Circle):
        rel = v - obs.center
        rho = float(np.hypot(*rel))
        psi = math.atan2(rel[1], rel[0])
        alpha = math.acos(obs.radius / rho)
        out = []
        for phi in (psi - alpha, psi + alpha):
            x = obs.center + obs.radius * np.array([math.cos(phi), math.sin(phi)])
            out.append((x, obs.radius * phi, float(np.hypot(*(x - v)))))
        (xl, sl, dl), (xu, su, du) = out
        k = 1.0 / obs.radius
        return HorizonData(v, xl, xu, sl, su, dl, du, k, k)
    if isinstance(obs, ConvexArc):
        sl = arc_shifted_root(obs, v, 0.0, "lower")
        su = arc_shifted_root(obs, v, 0.0, "upper")
        xl, xu = obs.point(sl), obs.point(su)
        return HorizonData(v, xl, xu, sl, su, float(np.hypot(*(xl - v))), float(np.hypot(*(xu - v))),
                           obs.curvature_at(sl), obs.curvature_at(su))
    if isinstance(obs, ConvexPolygon):
        if obs.contains(v, strict=True):
            raise GeometryError(f"vantage {tuple(v)} lies inside the polygon")
        verts = obs.vertices
        tol = TANGENCY_RTOL * max(obs.diameter, 1.0)
        facing = np.einsum("ij,ij->i", obs.outward_normals, v - verts) > tol
        if not facing.any():
            raise GeometryError(f"vantage {tuple(v)} lies on the polygon boundary")
        m = len(verts)
        # edge i runs from vertex i to i+1; the visible chain is a cyclic run of facing edges
        lo = next(i for i in range(m) if facing[i] and not facing[i - 1])
        hi = next(i for i in range(m) if facing[i] and not facing[(i + 1) % m])
        il, iu = lo, (hi + 1) % m
        xl, xu = verts[il].copy(), verts[iu].copy()
        return HorizonData(v, xl, xu, math.nan, math.nan, float(np.hypot(*(xl - v))),
                           float(np.hypot(*(xu - v))), math.inf, math.inf, il, iu)
    raise TypeError(f"unsupported obstacle {type(obs).__name__}")


# ---------------------------------------------------------------------------
# signed clearance of a segment
# ---------------------------------------------------------------------------


def _support(obs: Obstacle, nu: np.ndarray) -> np.ndarray:
    """Support function ``max_{x in O} x . nu`` for unit directions ``nu`` (..., 2)."""
    if isinstance(obs, Circle):
        return nu @ obs.center + obs.radius
    verts = obs.vertices if isinstance(obs, ConvexPolygon) else obs.hull
    return np.max(np.einsum("...j,mj->...m", nu, verts), axis=-1)


def signed_gaps(a, b, obs: Obstacle) -> np.ndarray:
    """Signed clearance of segments ``[a, b]`` (vectorised).

    Positive: distance between the segment and the obstacle.  Negative:
    minus the penetration depth of the supporting line, i.e. how far the line
    must be translated to clear the obstacle.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    blocked = segments_blocked(a, b, obs)
    d = b - a
    ln = np.hypot(d[..., 0], d[..., 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        # degenerate segments are never blocked, so their nan penetration is discarded below
        nu = np.stack([-d[..., 1], d[..., 0]], axis=-1) / ln[..., None]
        c = np.einsum("...j,...j->...", a, nu)
        pen = np.minimum(_support(obs, nu) - c, _support(obs, -nu) + c)
    if isinstance(obs, Circle):
        clear = _point_segment_distance(obs.center, a, b) - obs.radius
    else:
        verts = obs.vertices if isinstance(obs, ConvexPolygon) else obs.hull
        clear = _segment_polygon_distance(a, b, verts)
    return np.where(blocked, -np.maximum(pen, 0.0), np.maximum(clear, 0.0))


def _segment_polygon_distance(a, b, verts):
    va = verts
    vb = np.roll(verts, -1, axis=0)
    a_ = a[..., None, :]
    b_ = b[..., None, :]
    d1 = _point_segment_distance(va, a_, b_)
    d2 = _point_segment_distance(a_, va, vb)
    d3 = _point_segment_distance(b_, va, vb)
    return np.min(np.minimum(np.minimum(d1, d2), d3), axis=-1)


def tangency_point(a, b, obs: Obstacle, tol: float | None = None):
    """Point ``x*`` where the line through ``a``, ``b`` touches (or nearly touches) ``obs``.

    Returns ``(x_star, count)`` where ``count > 1`` flags a segment lying
    along a flat piece of the boundary (multiple tangency points).
    """
    a, b = as_vec(a), as_vec(b)
    d = b - a
    nu = np.array([-d[1], d[0]]) / float(np.hypot(*d))
    if isinstance(obs, Circle):
        side = 1.0 if float((obs.center - a) @ nu) < 0 else -1.0
        return obs.center + side * obs.radius * nu, 1
    verts = obs.vertices if isinstance(obs, ConvexPolygon) else obs.hull
    off = (verts - a) @ nu
    # the obstacle lies mostly on one side; the touching points are the extreme ones on the near side
    side = 1.0 if np.median(off) < 0 else -1.0
    ext = side * off
    j = int(np.argmax(ext))
    if isinstance(obs, ConvexArc):
        return _refine_arc_touch(obs, a, nu * side, obs.s[j]), 1
    tol = tol if tol is not None else 1e-9 * max(obs.diameter, 1.0)
    count = int(np.sum(ext >= ext[j] - tol))
    return verts[j].copy(), count


def _refine_arc_touch(arc: ConvexArc, a, nu, s_guess):
    # maximise Sigma(s).nu on the arc: the normal there is parallel to nu
    def g(s):
        return float(arc.normal(s) @ np.array([-nu[1], nu[0]]))

    h = 2e-3 * arc.L
    lo, hi = max(-arc.L, s_guess - h), min(arc.L, s_guess + h)
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        return arc.point(s_guess)
    return arc.point(bisect_root(g, lo, hi, 1e-13 * arc.L, flo=glo))
