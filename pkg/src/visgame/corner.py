"""Value near a corner of the obstacle and the semi-permeable barrier.

Locally the obstacle is the wedge ``{x . v1 < 0, x . v2 < 0}`` with
``v_i = (cos theta_i, sin theta_i)`` and the corner at the origin.  The
evader sits where it sees wall 1 and the pursuer where it sees wall 2, so
both lines of sight graze the corner.  In polar coordinates about the
corner the angular gap ``theta_P - theta_E`` lies in ``(0, pi)`` while the
players see each other and reaches ``pi`` at occlusion.

In time ``t`` a player at distance ``d`` can turn its polar angle by at most
``arcsin(gamma t / d)``, so the largest gap the evader can force is
``gap + arcsin(gamma_e t / d_E) - arcsin(gamma_p t / d_P)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import GameState, Speeds, ValueBounds
from .geometry import ConvexPolygon, GeometryError, as_vec, bisect_root, horizons

ANGLE_TOL = 1e-9


class CornerError(GeometryError):
    """State outside the corner-pinned configuration."""


@dataclass(frozen=True)
class CornerSpec:
    corner: np.ndarray
    theta1: float
    theta2: float
    r: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "corner", as_vec(self.corner))
        if not (-math.pi / 2 <= self.theta1 < self.theta2 < math.pi / 2):
            raise ValueError("wall angles must satisfy -pi/2 <= theta1 < theta2 < pi/2")
        if not self.r > 0:
            raise ValueError("wall length r must be positive")

    @property
    def v1(self) -> np.ndarray:
        return np.array([math.cos(self.theta1), math.sin(self.theta1)])

    @property
    def v2(self) -> np.ndarray:
        return np.array([math.cos(self.theta2), math.sin(self.theta2)])

    @property
    def u1(self) -> np.ndarray:
        """Unit direction of wall 1 (the ray on the line ``x . v1 = 0``)."""
        return np.array([math.sin(self.theta1), -math.cos(self.theta1)])

    @property
    def u2(self) -> np.ndarray:
        return np.array([-math.sin(self.theta2), math.cos(self.theta2)])

    def polygon(self) -> ConvexPolygon:
        """The wedge truncated to a parallelogram with walls of length ``r``."""
        c = self.corner
        pts = np.array([c, c + self.r * self.u1, c + self.r * (self.u1 + self.u2), c + self.r * self.u2])
        e0, e1 = pts[1] - pts[0], pts[2] - pts[1]
        if e0[0] * e1[1] - e0[1] * e1[0] < 0:
            pts = pts[::-1]
        return ConvexPolygon(pts)

    def rotated(self, alpha: float) -> "CornerSpec":
        return CornerSpec(self.corner, self.theta1 + alpha, self.theta2 + alpha, self.r)


@dataclass(frozen=True)
class PolarState:
    d_E: float
    theta_E: float
    d_P: float
    theta_P: float
    d_underbar: float = 0.0
    theta1: float = -math.pi / 2
    theta2: float = math.pi / 4

    @property
    def gap(self) -> float:
        """Angular separation ``theta_P - theta_E``; equals ``pi`` on the target boundary."""
        return self.theta_P - self.theta_E

    @property
    def on_boundary(self) -> bool:
        return abs(self.gap - math.pi) <= ANGLE_TOL

    def angles_ok(self, tol: float = ANGLE_TOL) -> bool:
        t1, t2 = self.theta1, self.theta2
        e_ok = t1 - math.pi / 2 - tol < self.theta_E < t2 - math.pi / 2 + tol
        p_ok = t2 - math.pi / 2 - tol < self.theta_P < t2 + math.pi / 2 + tol
        return bool(e_ok and p_ok and self.gap <= math.pi + tol)

    def cartesian(self, corner=(0.0, 0.0)):
        c = as_vec(corner)
        E = c + self.d_E * np.array([math.cos(self.theta_E), math.sin(self.theta_E)])
        P = c + self.d_P * np.array([math.cos(self.theta_P), math.sin(self.theta_P)])
        return E, P

    def scaled(self, lam: float) -> "PolarState":
        return PolarState(self.d_E * lam, self.theta_E, self.d_P * lam, self.theta_P, self.d_underbar * lam,
                          self.theta1, self.theta2)


def _wrap_near(theta: float, ref: float) -> float:
    return theta + 2 * math.pi * round((ref - theta) / (2 * math.pi))


def to_polar(state: GameState, spec: CornerSpec, d_underbar: float = 0.0, check_horizons: bool = True) -> PolarState:
    """Polar coordinates of both players about the corner, with validation."""
    E = state.E - spec.corner
    P = state.P - spec.corner
    dE, dP = float(np.hypot(*E)), float(np.hypot(*P))
    if min(dE, dP) <= d_underbar:
        raise CornerError("a player is too close to the corner")
    t1, t2 = spec.theta1, spec.theta2
    thE = _wrap_near(math.atan2(E[1], E[0]), t1 - math.pi / 2 + 0.5 * (t2 - t1))
    thP = _wrap_near(math.atan2(P[1], P[0]), t2)
    ps = PolarState(dE, thE, dP, thP, d_underbar, t1, t2)
    if not ps.angles_ok():
        raise CornerError(f"angles (theta_E={thE:.6g}, theta_P={thP:.6g}) outside the corner configuration")
    if check_horizons:
        poly = spec.polygon()
        tol = 1e-9 * max(spec.r, 1.0)
        for name, X in (("E", state.E), ("P", state.P)):
            h = horizons(X, poly)
            if min(np.hypot(*(h.x_lower - spec.corner)), np.hypot(*(h.x_upper - spec.corner))) > tol:
                raise CornerError(f"the corner is not a visibility horizon of {name}")
    return ps


def pin_margin(ps: PolarState) -> tuple[float, float]:
    """Distances each player can travel while the corner stays its horizon.

    The evader is pinned on ``{x . v1 > 0, x . v2 < 0}`` and the pursuer on
    ``{x . v2 > 0, x . v1 <= 0}``; the margins are distances to those lines.
    """
    v1 = np.array([math.cos(ps.theta1), math.sin(ps.theta1)])
    v2 = np.array([math.cos(ps.theta2), math.sin(ps.theta2)])
    E, P = ps.cartesian()
    return min(float(E @ v1), float(-(E @ v2))), min(float(P @ v2), float(-(P @ v1)))


def t0_corner(ps: PolarState, obs: ConvexPolygon | None, sp: Speeds, n_check: int = 256) -> float:
    """Largest ``t0`` with both players halfway from the obstacle at most and the corner pinned.

    ``obs`` is the polygon positioned with the corner at the origin (defaults
    to the wedge polygon of the state's wall angles).  Pinning is verified
    on ``n_check`` reachable points per player.
    """
    if obs is None:
        obs = CornerSpec((0, 0), ps.theta1, ps.theta2).polygon()
    E, P = ps.cartesian()
    inf = math.inf
    t_dist = min(obs.distance(E) / (2 * sp.gamma_e) if sp.gamma_e > 0 else inf,
                 obs.distance(P) / (2 * sp.gamma_p) if sp.gamma_p > 0 else inf)
    mE, mP = pin_margin(ps)
    t_pin = min(max(mE, 0.0) / sp.gamma_e if sp.gamma_e > 0 else inf,
                max(mP, 0.0) / sp.gamma_p if sp.gamma_p > 0 else inf)
    t0 = min(t_dist, t_pin)
    if not math.isfinite(t0):
        raise ValueError("both speeds vanish")
    if t0 > 0 and n_check:
        # sample the reachable circles slightly inside t0 and confirm the corner stays a horizon
        ang = np.linspace(0, 2 * math.pi, n_check, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        corner = np.zeros(2)
        for X, g in ((E, sp.gamma_e), (P, sp.gamma_p)):
            for Y in X + (1 - 1e-9) * g * t0 * dirs:
                h = horizons(Y, obs)
                if min(np.hypot(*(h.x_lower - corner)), np.hypot(*(h.x_upper - corner))) > 1e-9:
                    raise CornerError("corner pinning failed inside the computed t0")
    return t0


def S_corner(t, ps: PolarState, sp: Speeds):
    """Largest angular gap the evader can force at time ``t``."""
    t = np.asarray(t, dtype=float)
    aE = sp.gamma_e * t / ps.d_E
    aP = sp.gamma_p * t / ps.d_P
    if np.any(aE > 1 + 1e-15) or np.any(aP > 1 + 1e-15) or np.any(t < 0):
        raise ValueError("t outside the arcsin domain")
    out = ps.gap + np.arcsin(np.minimum(aE, 1.0)) - np.arcsin(np.minimum(aP, 1.0))
    return float(out) if out.ndim == 0 else out


def value_corner(ps: PolarState, sp: Speeds, t0: float, cells: int = 1024) -> float | None:
    """Smallest ``t`` in ``[0, t0]`` with ``S_corner(t) = pi``, or ``None``.

    Boundary states (gap already ``pi``) return 0.
    """
    if ps.gap >= math.pi - ANGLE_TOL * 1e-3:
        return 0.0
    f = lambda t: S_corner(t, ps, sp) - math.pi  # noqa: E731
    grid = np.linspace(0.0, t0, cells + 1)
    vals = S_corner(grid, ps, sp) - math.pi
    idx = np.nonzero(vals >= 0)[0]
    if len(idx) == 0:
        return None
    i = int(idx[0])
    if vals[i] == 0:
        return float(grid[i])
    return bisect_root(f, float(grid[i - 1]), float(grid[i]), 1e-12 * t0, flo=float(vals[i - 1]))


def corner_rate(ps: PolarState, sp: Speeds) -> float:
    return sp.gamma_e / ps.d_E - sp.gamma_p / ps.d_P


def corner_bounds(ps: PolarState, sp: Speeds, t0: float) -> ValueBounds:
    rate = corner_rate(ps, sp)
    if sp.gamma_e * ps.d_P <= sp.gamma_p * ps.d_E:
        return ValueBounds(t0, math.inf, True, False, d_star=0.0, S0=ps.gap, t0=t0, t0_bar=t0)
    upper = (math.pi - ps.gap) / rate
    ok = ps.gap >= math.pi - t0 * rate
    return ValueBounds(0.0, upper, True, bool(ok), d_star=rate, S0=ps.gap, t0=t0, t0_bar=t0)


# ---------------------------------------------------------------------------
# barrier
# ---------------------------------------------------------------------------


def barrier_membership(ps: PolarState, sp: Speeds, tol: float = 1e-9) -> bool:
    a, b = sp.gamma_e * ps.d_P, sp.gamma_p * ps.d_E
    return bool(abs(a - b) <= tol * max(a, b) and ps.angles_ok(tol=0.0))


@dataclass
class BarrierTrajectory:
    t: np.ndarray
    d_E: np.ndarray
    d_P: np.ndarray
    theta_E: np.ndarray
    theta_P: np.ndarray
    drift: np.ndarray
    left_region: bool
    clamped: bool

    @property
    def max_drift(self) -> float:
        return float(np.max(self.drift))


def piecewise_constant_control(rng: np.random.Generator, pieces: int, kind: str = "random"):
    """Random opponent control as ``(pieces, 2)`` polar components with norm <= 1."""
    if kind == "angular":
        return np.column_stack([np.zeros(pieces), rng.uniform(-1, 1, pieces)])
    if kind == "radial":
        return np.column_stack([np.ones(pieces), np.zeros(pieces)])
    ang = rng.uniform(0, 2 * math.pi, pieces)
    mag = np.sqrt(rng.uniform(0, 1, pieces))
    return np.column_stack([mag * np.cos(ang), mag * np.sin(ang)])


def sample_control(pieces: np.ndarray, T: float, dt: float) -> np.ndarray:
    """Sample a piecewise-constant control (equal pieces on ``[0, T]``) at ``t_n = n dt``."""
    n = int(round(T / dt))
    t = np.arange(n) * dt
    k = np.minimum((t / T * len(pieces)).astype(int), len(pieces) - 1)
    return pieces[k]


def barrier_mimic_simulate(ps: PolarState, sp: Speeds, opponent, dt: float, T: float,
                           defender: str = "evader", defender_angular: float = 0.0,
                           strict: bool = False) -> BarrierTrajectory:
    """Simulate the radial-mimic strategy against a sampled opponent control.

    ``opponent`` is an ``(n, 2)`` array of polar control components
    ``(radial, angular)`` at times ``n dt`` (or a piecewise-constant table
    that is resampled).  The defender copies the opponent's radial component
    with one sample of latency (a non-anticipating sample-and-hold) and uses
    ``defender_angular`` times the remaining budget angularly.  Both players
    follow explicit Euler steps of ``d' = gamma u_r``, ``theta' = gamma u_theta / d``.
    """
    if defender not in ("evader", "pursuer"):
        raise ValueError("defender must be 'evader' or 'pursuer'")
    ctrl = np.asarray(opponent, dtype=float)
    n = int(round(T / dt))
    if len(ctrl) != n:
        ctrl = sample_control(ctrl, T, dt)
    if np.any(np.hypot(ctrl[:, 0], ctrl[:, 1]) > 1 + 1e-12):
        raise ValueError("opponent control exceeds unit magnitude")
    gE, gP = sp.gamma_e, sp.gamma_p
    dE = np.empty(n + 1)
    dP = np.empty(n + 1)
    thE = np.empty(n + 1)
    thP = np.empty(n + 1)
    dE[0], dP[0], thE[0], thP[0] = ps.d_E, ps.d_P, ps.theta_E, ps.theta_P
    left = clamped = False
    prev_r = ctrl[0, 0]
    for k in range(n):
        b = ctrl[k]
        a_r = prev_r
        a_th = defender_angular * math.sqrt(max(0.0, 1.0 - a_r * a_r))
        prev_r = b[0]
        if defender == "evader":
            uE, uP = (a_r, a_th), (b[0], b[1])
        else:
            uE, uP = (b[0], b[1]), (a_r, a_th)
        dE[k + 1] = dE[k] + dt * gE * uE[0]
        dP[k + 1] = dP[k] + dt * gP * uP[0]
        thE[k + 1] = thE[k] + dt * gE * uE[1] / dE[k]
        thP[k + 1] = thP[k] + dt * gP * uP[1] / dP[k]
        for arr in (dE, dP):
            if arr[k + 1] <= ps.d_underbar:
                arr[k + 1] = max(ps.d_underbar, 1e-12)
                clamped = True
        st = PolarState(dE[k + 1], thE[k + 1], dP[k + 1], thP[k + 1], 0.0, ps.theta1, ps.theta2)
        if not st.angles_ok(tol=0.0) or st.gap >= math.pi:
            left = True
    if strict and (left or clamped):
        raise CornerError("trajectory left the corner-pinned region before T")
    drift = np.abs(gE * dP - gP * dE)
    return BarrierTrajectory(np.arange(n + 1) * dt, dE, dP, thE, thP, drift, left, clamped)


def corner_state(d_E: float, d_P: float, gap: float, theta_E: float = -5 * math.pi / 8,
                 theta1: float = -math.pi / 2, theta2: float = math.pi / 4) -> PolarState:
    """Convenience constructor with the default wedge."""
    return PolarState(d_E, theta_E, d_P, theta_E + gap, 0.0, theta1, theta2)
