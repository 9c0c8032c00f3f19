"""Scenario files: versioned UTF-8 JSON describing one obstacle, speeds and states."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .corner import CornerSpec, PolarState
from .game import GameState, Speeds
from .geometry import Circle, ConvexArc, ConvexPolygon

SCHEMA_ID = "visgame.scenario/1"

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "required": ["schema", "obstacle", "speeds", "states"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "id": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "obstacle": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["type", "center", "radius"],
                 "properties": {"type": {"const": "circle"}, "center": _vec, "radius": _pos}},
                {"type": "object", "additionalProperties": False, "required": ["type", "vertices"],
                 "properties": {"type": {"const": "polygon"},
                                "vertices": {"type": "array", "items": _vec, "minItems": 3}}},
                {"type": "object", "additionalProperties": False, "required": ["type", "corner", "theta1", "theta2"],
                 "properties": {"type": {"const": "corner"}, "corner": _vec, "theta1": {"type": "number"},
                                "theta2": {"type": "number"}, "r": _pos}},
                {"type": "object", "additionalProperties": False,
                 "required": ["type", "s", "kappa", "start", "start_angle"],
                 "properties": {"type": {"const": "arc"},
                                "s": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                                "kappa": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2},
                                "start": _vec, "start_angle": {"type": "number"}}},
            ]
        },
        "speeds": {"type": "object", "additionalProperties": False, "required": ["gamma_e", "gamma_p"],
                   "properties": {"gamma_e": {"type": "number", "minimum": 0},
                                  "gamma_p": {"type": "number", "minimum": 0}}},
        "states": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "E": _vec,
                    "P": _vec,
                    "polar": {"type": "object", "additionalProperties": False,
                              "required": ["d_E", "theta_E", "d_P", "theta_P"],
                              "properties": {k: {"type": "number"} for k in ("d_E", "theta_E", "d_P", "theta_P")}},
                },
                "oneOf": [{"required": ["E", "P"]}, {"required": ["polar"]}],
            },
        },
        "params": {"type": "object"},
    },
}

DEFAULT_PARAMS = {
    "delta": None,
    "epsilon": 0.0,
    "boundary_tol": None,
    "interface_tol": 1e-9,
    "oracle": {"dt": 2e-3, "depth": 150, "n_dirs_e": 64, "n_dirs_p": 64},
    "grid": {"n": 17, "half_width": 3.0},
    "t_samples": 101,
}


class ScenarioError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass
class Scenario:
    id: str
    obstacle: object
    speeds: Speeds
    states: list
    state_ids: list
    params: dict = field(default_factory=dict)
    seed: int = 0
    corner: CornerSpec | None = None
    raw: dict = field(default_factory=dict)

    def param(self, key, default=None):
        return self.params.get(key, DEFAULT_PARAMS.get(key, default))

    def polar(self, i: int) -> PolarState:
        """Polar form of state ``i`` about the corner (corner scenarios only)."""
        if self.corner is None:
            raise ScenarioError("scenario has no corner obstacle")
        st = self.states[i]
        c = self.corner
        E, P = st.E - c.corner, st.P - c.corner
        return PolarState(float(np.hypot(*E)), math.atan2(E[1], E[0]), float(np.hypot(*P)),
                          math.atan2(P[1], P[0]), 0.0, c.theta1, c.theta2)


def _error_location(text: str, path) -> str:
    """Best-effort line number of a JSON path, for error messages."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return "line 1"
    needle = f'"{keys[-1]}"'
    for ln, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return f"line {ln}"
    return "line ?"


def _build_obstacle(spec: dict):
    kind = spec["type"]
    if kind == "circle":
        return Circle(spec["center"], spec["radius"]), None
    if kind == "polygon":
        return ConvexPolygon(np.asarray(spec["vertices"], dtype=float)), None
    if kind == "corner":
        c = CornerSpec(spec["corner"], spec["theta1"], spec["theta2"], spec.get("r", 10.0))
        return c.polygon(), c
    s = np.asarray(spec["s"], dtype=float)
    k = np.asarray(spec["kappa"], dtype=float)
    if len(s) != len(k) or np.any(np.diff(s) <= 0) or s[-1] <= 0 or abs(s[0] + s[-1]) > 1e-12 * s[-1]:
        raise ScenarioError("arc table needs increasing s covering [-L, L], one kappa per s")
    arc = ConvexArc.from_curvature(lambda x: np.interp(x, s, k), float(s[-1]), spec["start"], spec["start_angle"])
    return arc, None


def parse(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = _error_location(text, exc.absolute_path)
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema error at {path} ({where}): {exc.message}") from exc
    try:
        obs, corner = _build_obstacle(raw["obstacle"])
        sp = Speeds(raw["speeds"]["gamma_e"], raw["speeds"]["gamma_p"])
    except ValueError as exc:
        raise ScenarioError(f"invalid obstacle or speeds: {exc}") from exc
    states, ids = [], []
    for item in raw["states"]:
        if "polar" in item:
            if corner is None:
                raise ScenarioError(f"state {item['id']}: polar states need a corner obstacle")
            p = item["polar"]
            ps = PolarState(p["d_E"], p["theta_E"], p["d_P"], p["theta_P"], 0.0, corner.theta1, corner.theta2)
            E, P = ps.cartesian(corner.corner)
            st = GameState(E, P)
        else:
            st = GameState(item["E"], item["P"])
        try:
            st.validate(obs)
        except ValueError as exc:
            raise ScenarioError(f"state {item['id']}: {exc}") from exc
        states.append(st)
        ids.append(item["id"])
    if len(set(ids)) != len(ids):
        raise ScenarioError("state ids must be unique")
    return Scenario(raw.get("id", "scenario"), obs, sp, states, ids, raw.get("params", {}), raw.get("seed", 0),
                    corner, raw)


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
