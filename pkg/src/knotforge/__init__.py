"""Discrete knot energies of polygons, their smooth limits, and knot-class preserving minimization."""

__version__ = "0.1.0"

from .curves import Circle, Ellipse, TorusKnot, curve_from_spec, inscribe_equilateral, inscribe_uniform
from .energies import (
    EnergyReport,
    dcrit,
    dcsd,
    discrete_kappa,
    menger_discrete,
    menger_power_mean,
    min_distance_energy,
    min_distance_U,
    minrad,
    moebius_discrete,
    ropelength_discrete,
    thickness_discrete,
)
from .errors import ConvergenceError, KnotforgeError, ParseError, ValidationError
from .geometry import (
    PolygonalKnot,
    circumradius,
    menger_kappa,
    regular_ngon,
    segment_min_distance,
    sweep_crossing_check,
)
from .minimize import MinimizeConfig, MinimizeRun, anneal, descend_fd, project_equilateral, replay_move_log
from .reference import ReferenceValue, menger_smooth, moebius_smooth, thickness_smooth

__all__ = [
    "Circle", "Ellipse", "TorusKnot", "curve_from_spec", "inscribe_equilateral", "inscribe_uniform",
    "EnergyReport", "dcrit", "dcsd", "discrete_kappa", "menger_discrete", "menger_power_mean",
    "min_distance_energy", "min_distance_U", "minrad", "moebius_discrete", "ropelength_discrete",
    "thickness_discrete", "ConvergenceError", "KnotforgeError", "ParseError", "ValidationError",
    "PolygonalKnot", "circumradius", "menger_kappa", "regular_ngon", "segment_min_distance",
    "sweep_crossing_check", "MinimizeConfig", "MinimizeRun", "anneal", "descend_fd",
    "project_equilateral", "replay_move_log", "ReferenceValue", "menger_smooth", "moebius_smooth",
    "thickness_smooth",
]
