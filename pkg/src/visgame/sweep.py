"""Lax-Friedrichs fast sweeping for the stationary problem ``H(X, grad V) = 1``.

The state ``X = (x_E, y_E, x_P, y_P)`` lives on a tensor grid.  Nodes are

* *obstacle* nodes (a player inside the obstacle) and *target* nodes
  (segment ``[E, P]`` blocked) -- excluded;
* *free* nodes -- updated;
* *usable boundary* nodes -- target nodes next to a free node where the
  evader can close the gap.  They carry the ghost value ``g / H(grad g)``
  (``g`` the signed segment clearance, negative there), a linear
  extrapolation of the value through the target boundary, and are
  reported as 0.

Excluded neighbours (and neighbours outside the box) are replaced by the
centre value, a homogeneous Neumann closure.

Update at a free node with centred differences ``p_d``::

    V = (1 - H(p) + sum_d s_d (V_d+ + V_d-) / (2 h_d)) / sum_d (s_d / h_d)

with dissipation ``s_d = gamma_e`` on evader axes and ``gamma_p`` on
pursuer axes.  All 16 Gauss-Seidel orderings are cycled.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field

import numba
import numpy as np

from .game import Speeds
from .geometry import Obstacle, as_vec, segments_blocked, signed_gaps

MAGIC = b"SWPF"
VERSION = 1

FREE, OBST, TARGET, GHOST = 0, 1, 2, 3


class SweepNotConverged(RuntimeError):
    def __init__(self, msg, field=None):
        super().__init__(msg)
        self.field = field


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned 4D box; an axis with ``n = 1`` is frozen at ``lo``."""

    lo: tuple
    hi: tuple
    n: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        n = tuple(int(x) for x in self.n)
        if not (len(lo) == len(hi) == len(n) == 4):
            raise ValueError("grid needs four axes")
        for a, b, k in zip(lo, hi, n):
            if k < 1 or (k > 1 and not b > a):
                raise ValueError("each axis needs n >= 1 and hi > lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)

    @classmethod
    def cube(cls, half_width: float, n: int, center=(0.0, 0.0)) -> "GridSpec":
        c = as_vec(center)
        lo = (c[0] - half_width, c[1] - half_width) * 2
        hi = (c[0] + half_width, c[1] + half_width) * 2
        return cls(lo, hi, (n,) * 4)

    @classmethod
    def static_pursuer(cls, lo_e, hi_e, n: int, P) -> "GridSpec":
        P = as_vec(P)
        return cls((lo_e[0], lo_e[1], P[0], P[1]), (hi_e[0], hi_e[1], P[0], P[1]), (n, n, 1, 1))

    @property
    def h(self) -> np.ndarray:
        return np.array([(b - a) / (k - 1) if k > 1 else 1.0 for a, b, k in zip(self.lo, self.hi, self.n)])

    def axes(self):
        return [np.linspace(a, b, k) if k > 1 else np.array([a]) for a, b, k in zip(self.lo, self.hi, self.n)]

    def points(self) -> np.ndarray:
        g = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(g, axis=-1)


@dataclass
class SweepField:
    grid: GridSpec
    values: np.ndarray
    extended: np.ndarray
    kind: np.ndarray
    sp: Speeds
    residual: float = math.nan
    sweeps: int = 0
    converged: bool = False
    v_cap: float = math.inf
    meta: dict = field(default_factory=dict)

    @property
    def h(self) -> np.ndarray:
        return self.grid.h

    @property
    def bounds(self):
        return self.grid.lo, self.grid.hi

    @property
    def obstacle_mask(self) -> np.ndarray:
        return self.kind == OBST

    @property
    def target_mask(self) -> np.ndarray:
        return (self.kind == TARGET) | (self.kind == GHOST)

    @property
    def usable_mask(self) -> np.ndarray:
        return self.kind == GHOST

    @property
    def free_mask(self) -> np.ndarray:
        return self.kind == FREE

    @property
    def boundary_mask(self) -> np.ndarray:
        """Free nodes with a target neighbour (the discrete target boundary seen from outside)."""
        return self.free_mask & _neighbour_any(self.target_mask)

    def interpolate(self, X) -> float:
        """Multilinear interpolation of the extended field at a 4D point, clipped at 0."""
        return float(max(_interp(self.grid, self.extended, as4(X)), 0.0))


def as4(X) -> np.ndarray:
    X = np.asarray(X, dtype=float).reshape(4)
    return X


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------


def _neighbour_any(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    for ax in range(mask.ndim):
        if mask.shape[ax] < 2:
            continue
        sl_a = [slice(None)] * mask.ndim
        sl_b = [slice(None)] * mask.ndim
        sl_a[ax] = slice(1, None)
        sl_b[ax] = slice(None, -1)
        out[tuple(sl_b)] |= mask[tuple(sl_a)]
        out[tuple(sl_a)] |= mask[tuple(sl_b)]
    return out


def _gap_and_grad(E, P, obs, step):
    g = signed_gaps(E, P, obs)
    grads = []
    for arr_idx in range(4):
        e = np.zeros(4)
        e[arr_idx] = step
        Ep, Pp = E + e[:2], P + e[2:]
        Em, Pm = E - e[:2], P - e[2:]
        grads.append((signed_gaps(Ep, Pp, obs) - signed_gaps(Em, Pm, obs)) / (2 * step))
    return g, np.stack(grads, axis=-1)


def classify_nodes(obs: Obstacle, grid: GridSpec, sp: Speeds, interface_tol: float = 1e-9):
    """Node kinds and ghost values for the extended field.

    Target nodes next to a free node become ghosts when the gap-closing
    rate ``H(grad g)`` is non-negative.
    """
    X = grid.points()
    E = X[..., :2]
    P = X[..., 2:]
    r_in = _inside(obs, E) | _inside(obs, P)
    blocked = np.zeros(X.shape[:-1], dtype=bool)
    ok = ~r_in
    blocked[ok] = segments_blocked(E[ok], P[ok], obs)
    kind = np.full(X.shape[:-1], FREE, dtype=np.int8)
    kind[r_in] = OBST
    kind[blocked] = TARGET
    free = kind == FREE
    cand = (kind == TARGET) & _neighbour_any(free)
    ghost = np.full(X.shape[:-1], np.nan)
    if cand.any():
        Ec, Pc = E[cand], P[cand]
        step = 1e-6 * max(obs.diameter, 1.0)
        g, grad = _gap_and_grad(Ec, Pc, obs, step)
        gE = np.hypot(grad[:, 0], grad[:, 1])
        gP = np.hypot(grad[:, 2], grad[:, 3])
        H = sp.gamma_e * gE - sp.gamma_p * gP
        usable = H >= -interface_tol * (sp.gamma_e * gE + sp.gamma_p * gP)
        # keep the extrapolation bounded where H is nearly zero
        H_floor = 0.25 * (sp.gamma_e * gE + sp.gamma_p * gP)
        val = np.minimum(g, 0.0) / np.maximum(H, H_floor)
        idx = np.argwhere(cand)
        for (ii, u, v) in zip(idx, usable, val):
            if u:
                kind[tuple(ii)] = GHOST
                ghost[tuple(ii)] = v
    return kind, ghost


def _inside(obs, pts):
    from .geometry import Circle, ConvexPolygon

    pts = np.asarray(pts, dtype=float)
    if isinstance(obs, Circle):
        return np.hypot(pts[..., 0] - obs.center[0], pts[..., 1] - obs.center[1]) < obs.radius * (1 - 1e-12)
    verts = obs.vertices if isinstance(obs, ConvexPolygon) else obs.hull
    e = np.roll(verts, -1, axis=0) - verts
    rel = pts[..., None, :] - verts
    c = (e[:, 0] * rel[..., 1] - e[:, 1] * rel[..., 0]) / np.hypot(e[:, 0], e[:, 1])
    return np.all(c > 1e-12 * max(obs.diameter, 1.0), axis=-1)


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _nb(V, kind, i0, i1, i2, i3, vc):
    n = V.shape
    if i0 < 0 or i1 < 0 or i2 < 0 or i3 < 0 or i0 >= n[0] or i1 >= n[1] or i2 >= n[2] or i3 >= n[3]:
        return vc
    k = kind[i0, i1, i2, i3]
    if k == 0 or k == 3:
        return V[i0, i1, i2, i3]
    return vc


@numba.njit(cache=True)
def _local(V, kind, i0, i1, i2, i3, h, sig, ge, gp):
    vc = V[i0, i1, i2, i3]
    num = 1.0
    den = 0.0
    pE2 = 0.0
    pP2 = 0.0
    for ax in range(4):
        if V.shape[ax] < 2 or sig[ax] == 0.0:
            continue
        d0 = 1 if ax == 0 else 0
        d1 = 1 if ax == 1 else 0
        d2 = 1 if ax == 2 else 0
        d3 = 1 if ax == 3 else 0
        vp = _nb(V, kind, i0 + d0, i1 + d1, i2 + d2, i3 + d3, vc)
        vm = _nb(V, kind, i0 - d0, i1 - d1, i2 - d2, i3 - d3, vc)
        p = (vp - vm) / (2.0 * h[ax])
        if ax < 2:
            pE2 += p * p
        else:
            pP2 += p * p
        num += sig[ax] * (vp + vm) / (2.0 * h[ax])
        den += sig[ax] / h[ax]
    Hval = ge * math.sqrt(pE2) - gp * math.sqrt(pP2)
    return num - Hval, den


@numba.njit(cache=True)
def _sweep_once(V, kind, h, sig, ge, gp, vcap, order):
    n0, n1, n2, n3 = V.shape
    s0 = 1 - 2 * ((order >> 0) & 1)
    s1 = 1 - 2 * ((order >> 1) & 1)
    s2 = 1 - 2 * ((order >> 2) & 1)
    s3 = 1 - 2 * ((order >> 3) & 1)
    change = 0.0
    for a0 in range(n0):
        i0 = a0 if s0 > 0 else n0 - 1 - a0
        for a1 in range(n1):
            i1 = a1 if s1 > 0 else n1 - 1 - a1
            for a2 in range(n2):
                i2 = a2 if s2 > 0 else n2 - 1 - a2
                for a3 in range(n3):
                    i3 = a3 if s3 > 0 else n3 - 1 - a3
                    if kind[i0, i1, i2, i3] != 0:
                        continue
                    num, den = _local(V, kind, i0, i1, i2, i3, h, sig, ge, gp)
                    if den <= 0.0:
                        continue
                    vn = num / den
                    if vn < 0.0:
                        vn = 0.0
                    if vn > vcap:
                        vn = vcap
                    d = abs(vn - V[i0, i1, i2, i3])
                    if d > change:
                        change = d
                    V[i0, i1, i2, i3] = vn
    return change


@numba.njit(cache=True)
def _residual(V, kind, h, sig, ge, gp, vcap):
    n0, n1, n2, n3 = V.shape
    r = 0.0
    for i0 in range(n0):
        for i1 in range(n1):
            for i2 in range(n2):
                for i3 in range(n3):
                    if kind[i0, i1, i2, i3] != 0:
                        continue
                    v = V[i0, i1, i2, i3]
                    if v <= 0.0 or v >= vcap:
                        continue
                    num, den = _local(V, kind, i0, i1, i2, i3, h, sig, ge, gp)
                    # H_LF(X, DV) - 1 = den * v - num
                    d = abs(den * v - num)
                    if d > r:
                        r = d
    return r


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def sweep_solve(obs: Obstacle, sp: Speeds, grid: GridSpec, lf_dissipation=None, max_sweeps: int = 4000,
                tol: float = 1e-8, v_cap: float | None = None, raise_on_fail: bool = True,
                interface_tol: float = 1e-9) -> SweepField:
    """Solve the stationary problem on ``grid`` by Lax-Friedrichs fast sweeping.

    Iterates full cycles of the 16 orderings until the largest change in a
    cycle drops below ``tol`` and the discrete residual is below ``tol``.
    ``max_sweeps`` counts individual orderings.
    """
    sigE, sigP = lf_dissipation if lf_dissipation is not None else (sp.gamma_e, sp.gamma_p)
    if sigE < sp.gamma_e or sigP < sp.gamma_p:
        raise ValueError("dissipation must dominate the characteristic speeds")
    h = grid.h
    if v_cap is None:
        span = max(hi - lo for lo, hi in zip(grid.lo, grid.hi))
        v_cap = 4.0 * span / max(sp.gamma_e, 1e-12)
    kind, ghost = classify_nodes(obs, grid, sp, interface_tol)
    V = np.where(kind == GHOST, ghost, 0.0)
    V[kind == FREE] = v_cap
    sig = np.array([sigE, sigE, sigP, sigP], dtype=float)
    sweeps = 0
    converged = False
    res = math.inf
    while sweeps < max_sweeps:
        change = 0.0
        for order in range(16):
            change = max(change, _sweep_once(V, kind, h, sig, sp.gamma_e, sp.gamma_p, v_cap, order))
            sweeps += 1
            if sweeps >= max_sweeps:
                break
        if change < tol:
            res = _residual(V, kind, h, sig, sp.gamma_e, sp.gamma_p, v_cap)
            if res <= tol * max(1.0, float(np.sum(sig / h))):
                converged = True
                break
    if not converged:
        res = _residual(V, kind, h, sig, sp.gamma_e, sp.gamma_p, v_cap)
    values = np.where(kind == FREE, V, np.nan)
    values[kind == GHOST] = 0.0
    extended = np.where((kind == FREE) | (kind == GHOST), V, np.nan)
    fld = SweepField(grid, values, extended, kind, sp, res, sweeps, converged, v_cap)
    if not converged and raise_on_fail:
        raise SweepNotConverged(f"sweeping did not converge in {sweeps} sweeps (residual {res:.3e})", fld)
    return fld


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------


def _interp(grid: GridSpec, arr: np.ndarray, X: np.ndarray) -> float:
    idx0 = []
    w = []
    for ax, (lo, hi, n) in enumerate(zip(grid.lo, grid.hi, grid.n)):
        if n == 1:
            idx0.append(0)
            w.append(0.0)
            continue
        h = (hi - lo) / (n - 1)
        u = (X[ax] - lo) / h
        if u < -1e-9 or u > n - 1 + 1e-9:
            raise ValueError(f"point outside the grid along axis {ax}")
        i = int(min(max(math.floor(u), 0), n - 2))
        idx0.append(i)
        w.append(min(max(u - i, 0.0), 1.0))
    tot = 0.0
    wsum = 0.0
    for corner in range(16):
        idx = []
        wt = 1.0
        skip = False
        for ax in range(4):
            bit = (corner >> ax) & 1
            if grid.n[ax] == 1:
                if bit:
                    skip = True
                    break
                idx.append(0)
                continue
            idx.append(idx0[ax] + bit)
            wt *= w[ax] if bit else 1 - w[ax]
        if skip or wt == 0.0:
            continue
        v = arr[tuple(idx)]
        if np.isnan(v):
            continue
        tot += wt * v
        wsum += wt
    if wsum == 0:
        return math.nan
    return tot / wsum


# ---------------------------------------------------------------------------
# fronts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrontSlice:
    t: float
    cells: np.ndarray  # boolean mask of front cells
    omega: np.ndarray  # boolean mask of {V >= t} over free cells

    def indices(self) -> set:
        return {tuple(int(i) for i in ix) for ix in np.argwhere(self.cells)}


def extract_front(fld: SweepField, t: float) -> FrontSlice:
    """Cells of ``{V >= t}`` adjacent to cells with ``V < t`` or to the target."""
    free = fld.free_mask
    V = np.where(free, fld.values, -np.inf)
    omega = free & (V >= t)
    below = (free & (V < t)) | fld.target_mask
    cells = omega & _neighbour_any(below)
    return FrontSlice(float(t), cells, omega)


def stationarity_map(fld: SweepField, t1: float, t2: float) -> np.ndarray:
    """Cells on the front at ``t1`` that are within one cell of the front at ``t2``.

    A front that does not move over ``[t1, t2]`` flags a discontinuity of the value.
    """
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    g1 = extract_front(fld, t1).cells
    g2 = extract_front(fld, t2).cells
    return g1 & (g2 | _neighbour_any(g2))


def nonusable_boundary_mask(fld: SweepField) -> np.ndarray:
    """Free cells adjacent to a non-usable target cell."""
    return fld.free_mask & _neighbour_any(fld.kind == TARGET)


# ---------------------------------------------------------------------------
# binary dump
# ---------------------------------------------------------------------------


def dump_field(fld: SweepField, fh) -> None:
    """Write ``magic, u32 version, u32 ndim, u32 n[ndim], f64 lo[ndim], f64 hi[ndim], f64 h[ndim], f64 values``.

    Little-endian, row-major (last axis fastest).  Excluded cells are NaN.
    """
    g = fld.grid
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, 4))
    buf.write(struct.pack("<4I", *g.n))
    buf.write(struct.pack("<4d", *g.lo))
    buf.write(struct.pack("<4d", *g.hi))
    buf.write(struct.pack("<4d", *g.h))
    buf.write(np.ascontiguousarray(fld.values, dtype="<f8").tobytes())
    fh.write(buf.getvalue())


def load_field(fh):
    """Inverse of :func:`dump_field`; returns ``(grid, values)``."""
    data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError("not a sweep field dump")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != VERSION or ndim != 4:
        raise ValueError(f"unsupported dump version {version} / ndim {ndim}")
    off = 12
    n = struct.unpack_from("<4I", data, off)
    off += 16
    lo = struct.unpack_from("<4d", data, off)
    off += 32
    hi = struct.unpack_from("<4d", data, off)
    off += 32
    off += 32  # spacing, recomputable from the bounds
    vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(n)
    return GridSpec(lo, hi, n), vals.copy()
