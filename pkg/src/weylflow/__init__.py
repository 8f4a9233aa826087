"""weylflow: reduced control systems on symmetric matrix spaces."""

from .errors import (CapacityError, DivergenceError, DomainError, LPError,
                     ShapeError, SingularityError, WeylflowError)
from .symspace import (HermitianEVD, PolarDecomposition, RealSVD,
                       SymmetricPair, WeylElement, pair_from_dict,
                       rotation_2d)
from .fields import (DervSample, DriftField, derv_sample, derv_strict_filter,
                     drift_from_dict, induced_field, make_random_affine,
                     speed_limit)
from .dynamics import (FullControls, ReducedControls, Selector, Trajectory,
                       integrate_full, integrate_inclusion, integrate_reduced,
                       path_length, path_speeds)
from .transfer import (LiftResult, ResidualReport, approximate_lift,
                       project_trajectory, projection_residual, regular_lift)
from .analysis import (ConeData, WeylPolytope, direct_accessibility_test,
                       face_decompose, invariance_test, majorization_margin,
                       majorizes, orbit_points, reach_sample,
                       simulate_dominating, simulation_direction,
                       stabilizable_test, tangent_cone_at_vertex,
                       weyl_polytope)
from . import bloch

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "DivergenceError", "DomainError", "LPError",
    "ShapeError", "SingularityError", "WeylflowError",
    "HermitianEVD", "PolarDecomposition", "RealSVD", "SymmetricPair",
    "WeylElement", "pair_from_dict", "rotation_2d",
    "DervSample", "DriftField", "derv_sample", "derv_strict_filter",
    "drift_from_dict", "induced_field", "make_random_affine", "speed_limit",
    "FullControls", "ReducedControls", "Selector", "Trajectory",
    "integrate_full", "integrate_inclusion", "integrate_reduced",
    "path_length", "path_speeds",
    "LiftResult", "ResidualReport", "approximate_lift", "project_trajectory",
    "projection_residual", "regular_lift",
    "ConeData", "WeylPolytope", "direct_accessibility_test", "face_decompose",
    "invariance_test", "majorization_margin", "majorizes", "orbit_points",
    "reach_sample", "simulate_dominating", "simulation_direction",
    "stabilizable_test", "tangent_cone_at_vertex", "weyl_polytope",
    "bloch",
]
