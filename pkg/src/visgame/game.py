"""Game state, isotropic Hamiltonian, target set and boundary classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import (
    GeometryError,
    Obstacle,
    as_vec,
    segment_blocked,
    signed_gaps,
    tangency_point,
)


class NonDifferentiableError(ValueError):
    """The Hamiltonian gradient is undefined when a momentum block vanishes."""


@dataclass(frozen=True)
class Speeds:
    gamma_e: float
    gamma_p: float

    def __post_init__(self):
        for name in ("gamma_e", "gamma_p"):
            g = getattr(self, name)
            if not (math.isfinite(g) and g >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {g}")

    def scaled(self, lam: float) -> "Speeds":
        return Speeds(self.gamma_e * lam, self.gamma_p * lam)


@dataclass(frozen=True)
class GameState:
    E: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "E", as_vec(self.E))
        object.__setattr__(self, "P", as_vec(self.P))

    def validate(self, obs: Obstacle) -> "GameState":
        for name, p in (("E", self.E), ("P", self.P)):
            if obs.contains(p, strict=True):
                raise GeometryError(f"{name}={tuple(p)} lies inside the obstacle")
        return self

    def transformed(self, R, t) -> "GameState":
        t = as_vec(t)
        return GameState(R @ self.E + t, R @ self.P + t)


class Label(str, Enum):
    USABLE = "Usable"
    NON_USABLE = "NonUsable"
    INTERFACE = "Interface"
    NOT_ON_BOUNDARY = "NotOnBoundary"


@dataclass(frozen=True)
class Classification:
    label: Label
    margin: float
    d_E: float = math.nan
    d_P: float = math.nan
    x_star: np.ndarray | None = None


@dataclass(frozen=True)
class ValueBounds:
    """Analytical lower/upper value estimates with validity flags."""

    lower: float
    upper: float
    lower_valid: bool
    upper_valid: bool
    delta: float = math.nan
    epsilon: float = 0.0
    d_star: float = 0.0
    C_star_or_C: float = math.nan
    S0: float = 0.0
    t0: float = math.nan
    t0_bar: float = math.nan

    def contains(self, v: float, slack: float = 0.0) -> bool:
        """Sandwich check, ignoring sides whose flag is off."""
        ok = True
        if self.lower_valid:
            ok &= v >= self.lower - slack
        if self.upper_valid:
            ok &= v <= self.upper + slack
        return bool(ok)


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------


def hamiltonian_iso(rho_E, rho_P, sp: Speeds):
    """``gamma_e |rho_E| - gamma_p |rho_P|``; broadcasts over leading axes."""
    rho_E = np.asarray(rho_E, dtype=float)
    rho_P = np.asarray(rho_P, dtype=float)
    return sp.gamma_e * np.hypot(rho_E[..., 0], rho_E[..., 1]) - sp.gamma_p * np.hypot(rho_P[..., 0], rho_P[..., 1])


def hamiltonian_iso_grad(rho_E, rho_P, sp: Speeds):
    """Gradient of :func:`hamiltonian_iso` with respect to both momentum blocks."""
    rho_E = np.asarray(rho_E, dtype=float)
    rho_P = np.asarray(rho_P, dtype=float)
    nE = np.hypot(rho_E[..., 0], rho_E[..., 1])
    nP = np.hypot(rho_P[..., 0], rho_P[..., 1])
    if np.any(nE == 0) or np.any(nP == 0):
        raise NonDifferentiableError("Hamiltonian is not differentiable at a zero momentum block")
    return sp.gamma_e * rho_E / nE[..., None], -sp.gamma_p * rho_P / nP[..., None]


# ---------------------------------------------------------------------------
# target set
# ---------------------------------------------------------------------------


def in_target(state: GameState, obs: Obstacle) -> bool:
    return segment_blocked(state.E, state.P, obs)


def boundary_gap(state: GameState, obs: Obstacle) -> float:
    """Clearance of the segment ``[E, P]`` to the obstacle (negative inside the target)."""
    return float(signed_gaps(state.E, state.P, obs))


def target_normal(state: GameState, obs: Obstacle, x_star=None):
    """Outward unit normal to the target boundary at a tangent configuration.

    Moving ``E`` by ``h`` perpendicular to the line shifts the line at ``x*``
    by ``h d_P / |E-P|``; the blocks are ``nu d_P/|E-P|`` and ``nu d_E/|E-P|``
    with ``nu`` the unit normal of the line pointing away from the obstacle.
    Returned blocks are normalised jointly.
    """
    E, P = state.E, state.P
    if x_star is None:
        x_star, _ = tangency_point(E, P, obs)
    d = P - E
    ell = float(np.hypot(*d))
    nu = np.array([-d[1], d[0]]) / ell
    # the obstacle lies on the side of x* beyond the line; nu points away from it
    probe = _interior_probe(obs, x_star)
    if float((probe - x_star) @ nu) > 0:
        nu = -nu
    dE = float(np.hypot(*(E - x_star)))
    dP = float(np.hypot(*(P - x_star)))
    nE, nP = nu * dP / ell, nu * dE / ell
    scale = math.hypot(dP, dE) / ell
    return nE / scale, nP / scale


def _interior_probe(obs, x_star):
    from .geometry import Circle, ConvexPolygon

    if isinstance(obs, Circle):
        return obs.center
    verts = obs.vertices if isinstance(obs, ConvexPolygon) else obs.hull
    return verts.mean(axis=0)


def classify_boundary(state: GameState, obs: Obstacle, sp: Speeds, boundary_tol: float | None = None,
                      interface_tol: float = 1e-9) -> Classification:
    """Usable / non-usable test at a tangent configuration.

    ``margin = gamma_e/d_E - gamma_p/d_P`` with distances to the tangency
    point.  States farther than ``boundary_tol`` from the target boundary
    are labelled ``NotOnBoundary``.
    """
    if boundary_tol is None:
        boundary_tol = 1e-6 * obs.diameter
    gap = boundary_gap(state, obs)
    if abs(gap) > boundary_tol:
        return Classification(Label.NOT_ON_BOUNDARY, math.nan)
    x_star, count = tangency_point(state.E, state.P, obs)
    if count > 1:
        raise GeometryError("segment is tangent along a flat piece; tangency point is ambiguous")
    dE = float(np.hypot(*(state.E - x_star)))
    dP = float(np.hypot(*(state.P - x_star)))
    margin = sp.gamma_e / dE - sp.gamma_p / dP
    if margin > interface_tol:
        label = Label.USABLE
    elif margin < -interface_tol:
        label = Label.NON_USABLE
    else:
        label = Label.INTERFACE
    return Classification(label, margin, dE, dP, x_star)


def finite_horizon_value(t: float, V_inf: float) -> float:
    if t < 0:
        raise ValueError("horizon t must be non-negative")
    return min(t, V_inf)
