"""Near-boundary value analysis for the visibility surveillance-evasion game."""

from .geometry import (
    Circle,
    ConvexArc,
    ConvexPolygon,
    GeometryError,
    HorizonData,
    curvature_at,
    horizons,
    segment_blocked,
    tangency_residual,
)
from .game import (
    Classification,
    GameState,
    Speeds,
    ValueBounds,
    boundary_gap,
    classify_boundary,
    finite_horizon_value,
    hamiltonian_iso,
    hamiltonian_iso_grad,
    in_target,
)

__version__ = "0.1.0"
