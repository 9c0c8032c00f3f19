"""Value near a smooth, uniformly convex piece of the obstacle boundary.

The visible states considered here have the evader on the left of the
line of sight and the pursuer on the right, with the obstacle below, so
that the evader's lower horizon ``s_E`` precedes the pursuer's upper
horizon ``s_P`` along the (counter-clockwise) parametrisation.  The game
ends when the two horizons meet.

For straight-line motion the farthest each horizon can be pushed in time
``t`` is a shifted tangency root:

* pursuer, upper side: ``(P - Sigma(s)) . n(s) = -gamma_p t``
* evader, lower side:  ``(E - Sigma(s)) . n(s) = +gamma_e t``

and the value (when it is at most ``t0``) is the first zero of
``S(t) = s_P(t) - s_E(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .game import GameState, Speeds, ValueBounds
from .geometry import (
    Circle,
    ConvexArc,
    GeometryError,
    arc_shifted_root,
    as_vec,
    bisect_root,
)

ARC_XTOL = 1e-12
TIME_RTOL = 1e-10


class SetupError(GeometryError):
    """The state does not satisfy the smooth-boundary assumptions."""


# ---------------------------------------------------------------------------
# boundary curves: a common interface over circles and sampled arcs
# ---------------------------------------------------------------------------


class CircleCurve:
    """Arclength parametrisation ``s = R * angle`` of a full circle."""

    def __init__(self, circle: Circle):
        self.obs = circle
        self.R = circle.radius
        self.c = circle.center
        self.L = math.inf
        self.kappa0 = 1.0 / circle.radius
        self.kappa_max = self.kappa0
        self.C_L = 0.0

    def frame(self, s):
        phi = s / self.R
        c, si = math.cos(phi), math.sin(phi)
        return self.c + self.R * np.array([c, si]), np.array([-si, c]), np.array([c, si])

    def curvature(self, s):
        return self.kappa0

    def residual(self, s, v):
        p, _, n = self.frame(s)
        return float((v - p) @ n)

    def shifted_root(self, v, shift, side, hint):
        rel = as_vec(v) - self.c
        rho = math.hypot(rel[0], rel[1])
        arg = (self.R + shift) / rho
        if not -1.0 <= arg <= 1.0:
            raise GeometryError("shifted tangency has no solution (vantage reaches the obstacle)")
        alpha = math.acos(arg)
        psi = math.atan2(rel[1], rel[0])
        phi = psi - alpha if side == "lower" else psi + alpha
        s = self.R * phi
        if hint is not None:
            period = 2 * math.pi * self.R
            s += period * round((hint - s) / period)
        return s


class ArcCurve:
    """Adapter exposing a :class:`ConvexArc` with local root bracketing."""

    def __init__(self, arc: ConvexArc):
        self.obs = arc
        self.L = arc.L
        self.kappa0 = arc.kappa0
        self.kappa_max = arc.kappa_max
        self.C_L = arc.C_L

    def frame(self, s):
        return self.obs.frame(s)

    def curvature(self, s):
        return self.obs.curvature_at(s)

    def residual(self, s, v):
        p, _, n = self.obs.frame(s)
        return float((v[0] - p[0]) * n[0] + (v[1] - p[1]) * n[1])

    def shifted_root(self, v, shift, side, hint):
        """Safeguarded bracketing from ``hint`` followed by bisection.

        The root moves to larger ``s`` when the shift pushes the vantage
        point along ``-n`` on the lower side (or ``+n`` on the upper side).
        """
        v = as_vec(v)
        L = self.L

        def g(s):
            return self.residual(s, v) - shift

        # the residual increases through the lower root and decreases through the upper one
        up = side == "lower"
        if hint is None:
            return arc_shifted_root(self.obs, v, shift, side)
        g0 = g(hint)
        if g0 == 0.0:
            return hint
        # on the lower side g < 0 left of the root; walk right if g0 < 0
        direction = 1.0 if (g0 < 0) == up else -1.0
        step = 1e-4 * L
        a, ga = hint, g0
        while True:
            b = a + direction * step
            if abs(b) >= L:
                b = math.copysign(L, b)
            gb = g(b)
            if (gb > 0) != (ga > 0) or gb == 0.0:
                lo, hi = (a, b) if a < b else (b, a)
                flo = ga if a < b else gb
                return bisect_root(g, lo, hi, ARC_XTOL * L, flo=flo)
            if abs(b) >= L:
                raise GeometryError(f"{side} horizon leaves the arc [-L, L] (shift {shift:g})")
            a, ga = b, gb
            step = min(2 * step, L / 32)


def make_curve(obs):
    if isinstance(obs, Circle):
        return CircleCurve(obs)
    if isinstance(obs, ConvexArc):
        return ArcCurve(obs)
    if isinstance(obs, (CircleCurve, ArcCurve)):
        return obs
    raise TypeError(f"smooth analysis needs a Circle or ConvexArc, got {type(obs).__name__}")


# ---------------------------------------------------------------------------
# setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothSetup:
    state: GameState
    curve: object
    sp: Speeds
    s_E_minus: float
    s_P_plus: float
    d_E: float
    d_P: float
    kappa_E0: float
    kappa_P0: float
    t0: float
    t0_bar: float

    @property
    def S0(self) -> float:
        return self.s_P_plus - self.s_E_minus

    @property
    def kappa0(self) -> float:
        return self.curve.kappa0

    @property
    def L(self) -> float:
        return self.curve.L

    @property
    def C_L(self) -> float:
        return self.curve.C_L

    @property
    def kappa_hi(self) -> float:
        """``kappa0 + L C_L``, the curvature of the comparison ball from the outside."""
        return self.kappa0 + (self.L * self.C_L if self.C_L > 0 else 0.0)

    # quantities entering the estimates
    @property
    def d_star(self) -> float:
        return max(self.sp.gamma_p / self.d_P - self.sp.gamma_e / self.d_E, 0.0)

    @property
    def d_star_kappa(self) -> float:
        return max(self.sp.gamma_p / (self.kappa_P0 * self.d_P) - self.sp.gamma_e / (self.kappa_E0 * self.d_E), 0.0)

    @property
    def C_star(self) -> float:
        return C_star(self.d_E, self.d_P, self.sp)

    @property
    def C(self) -> float:
        ge, gp = self.sp.gamma_e, self.sp.gamma_p
        return gp**2 / (2 * self.kappa_P0**2 * self.d_P**3) + ge**2 / (2 * self.kappa_E0**2 * self.d_E**3)


def C_star(d_E: float, d_P: float, sp: Speeds) -> float:
    return 2 * d_P**3 * d_E**3 / (d_E**3 * sp.gamma_p**2 + d_P**3 * sp.gamma_e**2)


def d_star(d_E: float, d_P: float, sp: Speeds) -> float:
    return max(sp.gamma_p / d_P - sp.gamma_e / d_E, 0.0)


def t0_bar_of(t0: float, kappa0: float, C_L: float, kappa_max: float) -> float:
    if C_L == 0:
        return t0
    return min(t0, kappa0**3 * t0 / (C_L * kappa_max), kappa0 * t0 / math.sqrt(C_L + kappa_max**2))


def _containment_ok(curve, state, sp, s_E, s_P, t) -> bool:
    # extreme horizon positions over all directions: both shift signs for both players
    if not math.isfinite(curve.L):
        return True
    try:
        for v, g, side, hint in ((state.E, sp.gamma_e, "lower", s_E), (state.P, sp.gamma_p, "upper", s_P)):
            for sgn in (1.0, -1.0):
                s = curve.shifted_root(v, sgn * g * t, side, hint)
                if not abs(s) < curve.L:
                    return False
    except GeometryError:
        return False
    return True


def build_setup(state: GameState, obs, sp: Speeds, t0: float | None = None, s_tol: float | None = None) -> SmoothSetup:
    """Validate a visible state near a smooth boundary piece and compute ``t0``, ``t0_bar``.

    ``t0`` defaults to the largest time with both players at most halfway
    to the obstacle and all reachable horizons inside ``(-L, L)``.
    """
    curve = make_curve(obs)
    base = curve.obs
    state.validate(base)
    E, P = state.E, state.P
    if isinstance(curve, CircleCurve):
        s_E = curve.shifted_root(E, 0.0, "lower", None)
        s_P = curve.shifted_root(P, 0.0, "upper", s_E)
    else:
        # only the facing horizon of each player needs to lie on the arc
        s_E = arc_shifted_root(base, E, 0.0, "lower")
        s_P = arc_shifted_root(base, P, 0.0, "upper")
    scale = curve.R if isinstance(curve, CircleCurve) else curve.L
    s_tol = s_tol if s_tol is not None else 1e-9 * scale
    if s_P < s_E - s_tol:
        raise SetupError(f"horizons are crossed (s_E={s_E:.6g} > s_P={s_P:.6g}); state occluded or mis-oriented")
    s_P = max(s_P, s_E)
    # the boundary between the horizons must be seen by both players
    tol = 1e-9 * max(scale, 1.0)
    if curve.residual(s_P, E) < -tol or curve.residual(s_E, P) < -tol:
        raise SetupError("players are mis-oriented: evader must be on the left of the line of sight")
    if isinstance(curve, CircleCurve) and s_P - s_E >= math.pi * curve.R:
        raise SetupError("horizons are more than half a circle apart")
    pE, _, _ = curve.frame(s_E)
    pP, _, _ = curve.frame(s_P)
    d_E = float(np.hypot(*(E - pE)))
    d_P = float(np.hypot(*(P - pP)))

    dist_E = base.distance(E)
    dist_P = base.distance(P)
    t_dist = min(dist_E / (2 * sp.gamma_e) if sp.gamma_e > 0 else math.inf,
                 dist_P / (2 * sp.gamma_p) if sp.gamma_p > 0 else math.inf)
    if t0 is None:
        if not math.isfinite(t_dist):
            raise SetupError("both speeds vanish; no time scale")
        if _containment_ok(curve, state, sp, s_E, s_P, t_dist):
            t0 = t_dist
        else:
            lo, hi = 0.0, t_dist
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _containment_ok(curve, state, sp, s_E, s_P, mid):
                    lo = mid
                else:
                    hi = mid
            t0 = lo
    else:
        if t0 > t_dist * (1 + 1e-12) or not _containment_ok(curve, state, sp, s_E, s_P, t0):
            raise SetupError(f"t0={t0} violates the small-time condition")
    if not t0 > 0:
        raise SetupError("no positive t0 keeps the horizons on the arc")
    t0b = t0_bar_of(t0, curve.kappa0, curve.C_L, curve.kappa_max)
    return SmoothSetup(state, curve, sp, s_E, s_P, d_E, d_P, curve.curvature(s_E), curve.curvature(s_P), t0, t0b)


# ---------------------------------------------------------------------------
# horizons in time and the function S
# ---------------------------------------------------------------------------


def max_horizon_param(vantage, speed: float, t: float, side: str, setup: SmoothSetup) -> float:
    """Largest horizon parameter reachable in time ``t`` (straight-line motion at ``speed``)."""
    if t < 0 or t > setup.t0 * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, t0={setup.t0}]")
    if side == "lower":
        shift, hint = speed * t, setup.s_E_minus
    elif side == "upper":
        shift, hint = -speed * t, setup.s_P_plus
    else:
        raise ValueError("side must be 'lower' or 'upper'")
    if t == 0 or speed == 0:
        return hint
    s = setup.curve.shifted_root(vantage, shift, side, hint)
    if abs(s) >= setup.curve.L:
        raise GeometryError("maximal horizon leaves the arc")
    return s


def S_of_t(t: float, setup: SmoothSetup) -> float:
    sp = setup.sp
    sP = max_horizon_param(setup.state.P, sp.gamma_p, t, "upper", setup)
    sE = max_horizon_param(setup.state.E, sp.gamma_e, t, "lower", setup)
    return sP - sE


def value_by_representation(setup: SmoothSetup, limit: bool = False, cells: int = 200) -> float | None:
    """First zero of ``S`` on ``[0, t0]``, or ``None`` when ``S > 0`` throughout.

    With ``limit=True`` a boundary state (``S0 = 0``) returns the first
    *positive* zero, i.e. the limit of the value from inside the game domain.
    """
    t0 = setup.t0
    S0 = setup.S0
    xtol = TIME_RTOL * t0
    if S0 <= 0 and not limit:
        return 0.0
    f = lambda t: S_of_t(t, setup)  # noqa: E731
    if S0 <= 0:
        # grid refined geometrically towards t = 0 so tiny positive roots are bracketed
        grid = np.unique(np.concatenate([t0 * np.logspace(-10, 0, 101), np.linspace(0, t0, cells + 1)[1:]]))
        prev_t, prev_f = 0.0, None
        for t in grid:
            ft = f(t)
            if prev_f is None and ft <= 0:
                return 0.0  # S decreases immediately: usable or interface state
            if prev_f is not None and ft <= 0:
                if ft == 0:
                    return float(t)
                return bisect_root(f, prev_t, float(t), xtol, flo=prev_f)
            prev_t, prev_f = float(t), ft
        return None
    grid = np.linspace(0.0, t0, cells + 1)
    prev_t, prev_f = 0.0, S0
    for t in grid[1:]:
        ft = f(float(t))
        if ft <= 0:
            if ft == 0:
                return float(t)
            return bisect_root(f, prev_t, float(t), xtol, flo=prev_f)
        prev_t, prev_f = float(t), ft
    return None


# ---------------------------------------------------------------------------
# horizon ODE
# ---------------------------------------------------------------------------


def _horizon_rate(s, X, Xdot, curve):
    p, T, n = curve.frame(s)
    r = p - X
    d = math.hypot(r[0], r[1])
    return float(Xdot @ n) / (curve.curvature(s) * d) * float((r / d) @ T)


def horizon_ode_step(setup: SmoothSetup, v_E, v_P, tau_grid):
    """Integrate the horizon dynamics along straight lines with classical RK4.

    ``E(tau) = E + tau gamma_e v_E`` and ``P(tau) = P + tau gamma_p v_P``.
    Returns arrays ``(s_E(tau), s_P(tau))`` on ``tau_grid``.
    """
    curve = setup.curve
    tau = np.asarray(tau_grid, dtype=float)
    out = []
    for X0, v, g, s0 in ((setup.state.E, v_E, setup.sp.gamma_e, setup.s_E_minus),
                         (setup.state.P, v_P, setup.sp.gamma_p, setup.s_P_plus)):
        Xd = g * as_vec(v)
        s = np.empty_like(tau)
        s[0] = s0
        for k in range(len(tau) - 1):
            h = tau[k + 1] - tau[k]
            t = tau[k]
            f = lambda tt, ss: _horizon_rate(ss, X0 + tt * Xd, Xd, curve)  # noqa: E731
            k1 = f(t, s[k])
            k2 = f(t + h / 2, s[k] + h * k1 / 2)
            k3 = f(t + h / 2, s[k] + h * k2 / 2)
            k4 = f(t + h, s[k] + h * k3)
            s[k + 1] = s[k] + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
            if abs(s[k + 1]) >= curve.L:
                raise GeometryError("horizon left the arc during integration")
        out.append(s)
    return out[0], out[1]


def optimal_directions(setup: SmoothSetup, t: float):
    """Directions realising the maximal horizons at time ``t``: ``-n(s_E(t))`` and ``+n(s_P(t))``."""
    sp = setup.sp
    sE = max_horizon_param(setup.state.E, sp.gamma_e, t, "lower", setup)
    sP = max_horizon_param(setup.state.P, sp.gamma_p, t, "upper", setup)
    return -setup.curve.frame(sE)[2], setup.curve.frame(sP)[2]


# ---------------------------------------------------------------------------
# analytical bounds
# ---------------------------------------------------------------------------


def lipschitz_hypothesis_ok(setup: SmoothSetup, epsilon: float) -> bool:
    ge, gp = setup.sp.gamma_e, setup.sp.gamma_p
    cap = 0.5 * epsilon * setup.kappa0**3 * setup.t0 * min(
        ge / (setup.kappa_E0**2 * setup.d_E**2), gp / (setup.kappa_P0**2 * setup.d_P**2))
    return setup.C_L <= cap


def value_bounds_smooth(setup: SmoothSetup, delta: float, epsilon: float = 0.0) -> ValueBounds:
    """Bounds in terms of the horizon curvatures (``d*_kappa`` and ``C(E,P)``)."""
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    hyp = lipschitz_hypothesis_ok(setup, epsilon) and 0 < delta < 1 - epsilon
    dk, C, S0 = setup.d_star_kappa, setup.C, setup.S0
    lower = min(dk / ((1 + delta + epsilon) * C), delta * setup.t0_bar)
    denom = (1 - epsilon - delta) * C
    upper = (math.sqrt(S0) + dk) / denom if denom > 0 else math.inf
    upper_ok = hyp and upper <= delta * setup.t0_bar and math.sqrt(S0) <= upper
    return ValueBounds(lower, upper, hyp, bool(upper_ok), delta, epsilon, dk, C, S0, setup.t0, setup.t0_bar)


def delta_floor(setup: SmoothSetup) -> float:
    return 1.0 - setup.kappa_hi**2 * setup.C_star


def value_bounds_kconst(setup: SmoothSetup, delta: float) -> ValueBounds:
    """Bounds with a single curvature constant (comparison with inner/outer balls)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    k0, kh = setup.kappa0, setup.kappa_hi
    ds, Cs, S0 = setup.d_star, setup.C_star, setup.S0
    lower = min(k0 / (1 + delta) * Cs * ds, delta * setup.t0_bar)
    upper = kh / (1 - delta) * Cs * (kh * math.sqrt(S0) + ds)
    upper_ok = upper <= delta * setup.t0_bar and delta >= delta_floor(setup) and math.sqrt(S0) <= upper
    return ValueBounds(lower, upper, True, bool(upper_ok), delta, 0.0, ds, Cs, S0, setup.t0, setup.t0_bar)


def bounds_with_representation(setup: SmoothSetup, bounds: ValueBounds, V_rep: float | None) -> ValueBounds:
    """When no zero of ``S`` exists the value exceeds ``t0``; report that as the lower bound."""
    if V_rep is None:
        return replace(bounds, lower=setup.t0, lower_valid=True, upper=math.inf, upper_valid=False)
    return bounds


@dataclass(frozen=True)
class ProfileBracket:
    slope_low: float
    slope_high: float
    delta: float
    sharp: bool
    d_star: float
    threshold: float

    def value_range(self):
        return self.slope_low * self.d_star, self.slope_high * self.d_star


def boundary_profile(d_E: float, d_P: float, sp: Speeds, kappa0: float, t0_bar: float, L: float = 0.0,
                     C_L: float = 0.0) -> ProfileBracket:
    """Slopes bracketing ``V / d*`` when approaching a non-usable tangent state.

    With ``kappa0^2 >= 1/C*`` the bracket tightens as ``d* -> 0`` (sharp
    regime): ``delta`` is chosen so that
    ``d* = (1-delta) delta t0_bar / (2 (kappa0 + L C_L) C*)``.
    Otherwise ``delta = max(delta_floor, 1/2)``.
    """
    Cs = C_star(d_E, d_P, sp)
    ds = d_star(d_E, d_P, sp)
    kh = kappa0 + (L * C_L if C_L > 0 else 0.0)
    floor = 1.0 - kh**2 * Cs
    sharp = kappa0**2 >= 1.0 / Cs
    if sharp:
        # largest admissible d* corresponds to delta = 1/2
        threshold = 0.25 * 0.5 * t0_bar / (2 * kh * Cs)
        if ds > threshold:
            raise ValueError(f"d*={ds:g} above the validity threshold {threshold:g}")
        if ds == 0:
            delta = 0.0
        else:
            # smaller root of (1-delta) delta = 2 kh Cs d* / t0_bar
            q = 2 * kh * Cs * ds / t0_bar
            delta = 0.5 * (1 - math.sqrt(1 - 4 * q))
    else:
        delta = max(floor, 0.5)
        threshold = (1 - delta) * delta * t0_bar / (kh * Cs)
        if ds >= threshold:
            raise ValueError(f"d*={ds:g} above the validity threshold {threshold:g}")
    return ProfileBracket(kappa0 * Cs / (1 + delta), kh * Cs / (1 - delta), delta, sharp, ds, threshold)
