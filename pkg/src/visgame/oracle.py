"""Discrete minimax oracle for the occlusion time.

Two information patterns are provided.

``mode="committed"`` (default): the evader commits to a heading from a
finite set, the pursuer answers with the heading (from its own set) that
delays occlusion the longest, and both move in straight lines.  Inside the
small-time regime optimal play is straight-line motion, so this recovers
the value up to heading resolution.  Occlusion is tested at every substep
``k dt``.

``mode="tree"``: the full alternating game in which both players may turn
at every step (evader first, pursuer best-responds).  Exponential in the
depth, so only for small depths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import GameState, Speeds
from .geometry import GeometryError, segments_blocked


@dataclass(frozen=True)
class DiscreteGameConfig:
    dt: float
    depth: int
    n_dirs_e: int = 64
    n_dirs_p: int = 64
    occlusion_tol: float = 0.0
    allow_stay: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if min(self.n_dirs_e, self.n_dirs_p) < 8:
            raise ValueError("at least 8 directions per player")

    @property
    def horizon(self) -> float:
        return self.dt * self.depth


def headings(n: int, stay: bool = True) -> np.ndarray:
    """Unit headings ``k 2 pi / n`` (plus the zero control).

    Heading sets for ``n`` and ``2n`` are nested, so refining never removes
    an option.
    """
    a = 2 * math.pi * np.arange(n) / n
    h = np.stack([np.cos(a), np.sin(a)], axis=1)
    return np.vstack([h, np.zeros((1, 2))]) if stay else h


def _first_hit(blocked: np.ndarray) -> np.ndarray:
    """Index of the first ``True`` along the last axis (``K`` if none)."""
    K = blocked.shape[-1]
    any_hit = blocked.any(axis=-1)
    return np.where(any_hit, blocked.argmax(axis=-1), K)


def occlusion_time_straight(state: GameState, obs, sp: Speeds, v_E, v_P, dt: float, depth: int) -> float:
    """First substep time at which straight-line motion occludes, or ``inf``."""
    k = np.arange(1, depth + 1)[:, None] * dt
    E = state.E + sp.gamma_e * k * np.asarray(v_E, dtype=float)
    P = state.P + sp.gamma_p * k * np.asarray(v_P, dtype=float)
    b = segments_blocked(E, P, obs)
    i = _first_hit(b)
    return float(k[i, 0]) if i < depth else math.inf


def discrete_value(state: GameState, obs, sp: Speeds, cfg: DiscreteGameConfig, mode: str = "committed",
                   return_policy: bool = False):
    """Oracle value: earliest guaranteed occlusion time, ``inf`` when beyond ``depth * dt``."""
    state.validate(obs)
    if segments_blocked(state.E, state.P, obs):
        raise GeometryError("state is already occluded")
    if mode == "tree":
        return _tree_value(state, obs, sp, cfg)
    if mode != "committed":
        raise ValueError(f"unknown mode {mode!r}")
    hE = headings(cfg.n_dirs_e, cfg.allow_stay)
    hP = headings(cfg.n_dirs_p, cfg.allow_stay)
    K = cfg.depth
    k = (np.arange(1, K + 1) * cfg.dt)[:, None]
    Etraj = state.E + sp.gamma_e * k[None, :, :] * hE[:, None, :]  # (nE, K, 2)
    Ptraj = state.P + sp.gamma_p * k[None, :, :] * hP[:, None, :]  # (nP, K, 2)
    best = np.full(len(hE), K, dtype=int)
    # chunk over evader headings to bound memory
    chunk = max(1, int(4_000_000 // max(1, len(hP) * K)))
    for s in range(0, len(hE), chunk):
        blk = segments_blocked(Etraj[s:s + chunk, None], Ptraj[None], obs)  # (c, nP, K)
        hit = _first_hit(blk)
        best[s:s + chunk] = hit.max(axis=1)
    i = int(np.argmin(best))
    val = math.inf if best[i] >= K else float((best[i] + 1) * cfg.dt)
    if return_policy:
        return val, hE[i]
    return val


def _tree_value(state, obs, sp, cfg):
    hE = headings(cfg.n_dirs_e, cfg.allow_stay)
    hP = headings(cfg.n_dirs_p, cfg.allow_stay)
    dt = cfg.dt

    def rec(E, P, depth):
        if depth == cfg.depth:
            return math.inf
        En = E + sp.gamma_e * dt * hE  # (nE, 2)
        Pn = P + sp.gamma_p * dt * hP  # (nP, 2)
        blk = segments_blocked(En[:, None], Pn[None], obs)
        best = math.inf
        for i in range(len(hE)):
            if blk[i].all():
                return (depth + 1) * dt
            worst = -math.inf
            for j in np.nonzero(~blk[i])[0]:
                worst = max(worst, rec(En[i], Pn[j], depth + 1))
                if worst >= best:
                    break
            best = min(best, worst)
        return best

    return rec(state.E, state.P, 0)
