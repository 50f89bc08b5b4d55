"""otray: transport-ray decompositions on constant-curvature spheres and
numerical certification of their disintegration, density, and divergence
identities."""

from .manifold import ManifoldParams, Tangent, distance, exp_map, grad_distance, log_map, s_K
from .measures import (
    DiscreteMeasure,
    Potential,
    primal_transport_cost,
    solve_kantorovich_dual,
)
from .rays import CylinderSet, RayTraceConfig, SheafSet, TransportRay, build_cylinder, \
    build_sheaf_partition, flow, ray_through
from .density import (
    DensityField,
    density_D,
    jacobian_bound_formula,
    jacobian_flow_numeric,
    pushforward_factors,
)
from .disintegration import QuadratureSpec, TestFunction, disintegration_residual, \
    integrate_rays, integrate_volume
from .divergence import (
    ConeField,
    continuity_residual,
    divergence_ac_cone,
    green_gauss_residual,
    jump_density,
    lower_bound_certificate,
    voronoi_assign,
)
from .scenarios import Scenario, load_scenario, materialize
from .checks import REGISTRY, run_check
from .report import Report, assemble, emit_report

__version__ = "0.1.0"

__all__ = [
    "ManifoldParams", "Tangent", "distance", "exp_map", "log_map",
    "grad_distance", "s_K",
    "DiscreteMeasure", "Potential", "solve_kantorovich_dual", "primal_transport_cost",
    "TransportRay", "RayTraceConfig", "SheafSet", "CylinderSet",
    "ray_through", "build_sheaf_partition", "build_cylinder", "flow",
    "DensityField", "density_D", "jacobian_flow_numeric",
    "jacobian_bound_formula", "pushforward_factors",
    "TestFunction", "QuadratureSpec", "integrate_volume", "integrate_rays",
    "disintegration_residual",
    "ConeField", "divergence_ac_cone", "voronoi_assign", "jump_density",
    "green_gauss_residual", "continuity_residual", "lower_bound_certificate",
    "Scenario", "load_scenario", "materialize",
    "REGISTRY", "run_check", "Report", "assemble", "emit_report",
    "__version__",
]
