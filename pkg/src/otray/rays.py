"""Transport-ray structure induced by a max-of-cones potential: endpoint
functionals, maximal rays, sheaf-set partitions, and cylinder sets with
their unit-speed flow.

Sign convention: a ray direction is the unit tangent toward the dominating
cone apex, so the potential increases at unit rate along +direction and the
flow parameter equals the u-offset from the base level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    AmbiguousDirectionError,
    EmptyPartitionError,
    InsufficientRayLengthError,
    NotInTransportSetError,
    OutOfWindowError,
    WindowOrderError,
)
from .manifold import ManifoldParams, Tangent, distance, exp_map, log_map
from .measures import Potential

APEX_TOL = 1e-9
DEDUPE_TOL = 1e-6


@dataclass(frozen=True)
class RayTraceConfig:
    """Bisection-march parameters for maximal ray extraction."""

    ray_tol: float = 1e-8
    step: Optional[float] = None  # default pi/(64 sqrt(K))
    tie_tol: float = 1e-10
    eps_ray: float = 1e-6

    def step_for(self, m: ManifoldParams) -> float:
        return self.step if self.step is not None else np.pi / (64.0 * np.sqrt(m.K))


@dataclass(frozen=True)
class TransportRay:
    """Maximal geodesic segment t -> exp_base(t * direction), t in
    [t_lower, t_upper], along which u is affine with unit slope."""

    base: np.ndarray
    direction: Tangent
    t_lower: float
    t_upper: float
    u_base: float
    manifold: ManifoldParams

    @property
    def length(self) -> float:
        return self.t_upper - self.t_lower

    def point_at(self, t: float) -> np.ndarray:
        return exp_map(self.base, t * self.direction.vec, self.manifold)

    @property
    def upper_endpoint(self) -> np.ndarray:
        return self.point_at(self.t_upper)

    @property
    def lower_endpoint(self) -> np.ndarray:
        return self.point_at(self.t_lower)


def alpha_beta(z, u: Potential, X, Y, tol: float = 1e-9) -> tuple[float, float]:
    """Endpoint functionals over the given supports.

    alpha(z) = sup { d(y, z) : y in Y, u(z) - u(y) = d(y, z) }   (to lower end)
    beta(z)  = sup { d(x, z) : x in X, u(x) - u(z) = d(x, z) }   (to upper end)

    Empty suprema are reported as -inf.
    """
    m = u.manifold
    uz = u(z)
    alpha = -np.inf
    for y in Y:
        d = distance(y, z, m)
        if abs(uz - u(y) - d) <= tol:
            alpha = max(alpha, d)
    beta = -np.inf
    for x in X:
        d = distance(x, z, m)
        if abs(u(x) - uz - d) <= tol:
            beta = max(beta, d)
    return float(alpha), float(beta)


def _affinity_defect(u: Potential, base, direction, u0: float, t: float) -> float:
    x = exp_map(base, t * direction, u.manifold)
    return abs(u(x) - (u0 + t))


def _march_boundary(u, base, direction, u0, cfg, m, sign) -> float:
    """Largest |t| (signed by `sign`) keeping u affine within ray_tol."""
    step = cfg.step_for(m)
    t_ok = 0.0
    t_bad = None
    t = 0.0
    while True:
        t_next = t + sign * step
        if abs(t_next) > m.diameter:
            t_bad = sign * m.diameter
            break
        if _affinity_defect(u, base, direction, u0, t_next) <= cfg.ray_tol:
            t_ok = t_next
            t = t_next
        else:
            t_bad = t_next
            break
    # bisect [t_ok, t_bad] down to ray_tol resolution
    while abs(t_bad - t_ok) > cfg.ray_tol:
        mid = 0.5 * (t_ok + t_bad)
        if _affinity_defect(u, base, direction, u0, mid) <= cfg.ray_tol:
            t_ok = mid
        else:
            t_bad = mid
    return t_ok


def ray_through(z, u: Potential, cfg: RayTraceConfig = RayTraceConfig()) -> TransportRay:
    """Maximal transport ray through z for a cone potential differentiable
    at z (unique dominating cone, z not at an apex)."""
    m = u.manifold
    z = np.asarray(z, dtype=float)
    idx = u.argmax(z, cfg.tie_tol)
    if len(idx) != 1:
        raise AmbiguousDirectionError(
            f"{len(idx)} cones tie at z; point lies on a cell boundary"
        )
    a = u.anchors[idx[0]]
    da = distance(z, a, m)
    if da <= APEX_TOL:
        raise AmbiguousDirectionError("z coincides with the dominating anchor apex")
    direction = log_map(z, a, m).vec / da  # unit, u increases along it
    u0 = u(z)
    t_upper = _march_boundary(u, z, direction, u0, cfg, m, +1)
    t_lower = _march_boundary(u, z, direction, u0, cfg, m, -1)
    if t_upper - t_lower <= cfg.ray_tol:
        raise NotInTransportSetError("ray through z has zero length")
    return TransportRay(z, Tangent(z, direction), t_lower, t_upper, u0, m)


@dataclass(frozen=True)
class RegionSpec:
    """Finite sample of a region of the transport set."""

    sample_points: np.ndarray  # (k, n+1)


@dataclass
class SheafSet:
    """Bundle of ray segments over base points on one level set of u."""

    base_points: list
    level: float
    u_window: tuple[float, float]
    member_rays: list


def build_sheaf_partition(
    u: Potential,
    region: RegionSpec,
    k: int,
    j: int,
    cfg: RayTraceConfig = RayTraceConfig(),
    max_base_diameter: Optional[float] = None,
) -> list[SheafSet]:
    """Partition the sampled transport set into sheaf sets over dyadic
    u-windows of width 2^-k, keeping only rays whose base clears both
    endpoints by more than 1/j.

    `max_base_diameter` optionally splits bases into pieces of bounded
    geodesic diameter (greedy ball clustering); by default bases are kept
    whole, which is safe on the sphere away from antipodes.
    """
    m = u.manifold
    width = 2.0 ** (-k)
    buckets: dict[int, SheafSet] = {}
    for z in np.atleast_2d(np.asarray(region.sample_points, dtype=float)):
        try:
            ray = ray_through(z, u, cfg)
        except (AmbiguousDirectionError, NotInTransportSetError):
            continue  # tie sets have measure zero; skip boundary samples
        uz = ray.u_base
        m_idx = int(np.floor(uz / width))
        level = (m_idx + 0.5) * width
        t_shift = level - uz
        if not (ray.t_lower < t_shift < ray.t_upper):
            continue
        base_pt = ray.point_at(t_shift)
        try:
            based = ray_through(base_pt, u, cfg)
        except (AmbiguousDirectionError, NotInTransportSetError):
            continue
        if min(-based.t_lower, based.t_upper) <= 1.0 / j:
            continue
        sheaf = buckets.get(m_idx)
        if sheaf is None:
            sheaf = SheafSet([], level, (m_idx * width, (m_idx + 1) * width), [])
            buckets[m_idx] = sheaf
        if any(distance(base_pt, b, m) < DEDUPE_TOL * m.diameter for b in sheaf.base_points):
            continue  # already represented: interiors of rays never cross
        sheaf.base_points.append(base_pt)
        sheaf.member_rays.append(based)

    sheaves = [buckets[i] for i in sorted(buckets)]
    if max_base_diameter is not None:
        sheaves = [piece for s in sheaves for piece in _split_by_diameter(s, max_base_diameter, m)]
    if not sheaves:
        raise EmptyPartitionError(f"no ray clears the 1/j = {1.0 / j} margin")
    return sheaves


def _split_by_diameter(sheaf: SheafSet, diam: float, m: ManifoldParams) -> list[SheafSet]:
    remaining = list(range(len(sheaf.base_points)))
    pieces = []
    while remaining:
        seed = remaining[0]
        taken = [
            i
            for i in remaining
            if distance(sheaf.base_points[seed], sheaf.base_points[i], m) <= diam / 2.0
        ]
        pieces.append(
            SheafSet(
                [sheaf.base_points[i] for i in taken],
                sheaf.level,
                sheaf.u_window,
                [sheaf.member_rays[i] for i in taken],
            )
        )
        remaining = [i for i in remaining if i not in taken]
    return pieces


@dataclass
class CylinderSet:
    """Compact base on a level set of u, a flow window h- < 0 < h+, and the
    flow map Phi^t(y) = exp_y(t * direction(y)).

    `normals` are the base slice normals (equal to `directions` for true
    cylinders, tilted for synthetic slices).  `base_weights` are the
    H^(n-1) quadrature weights of the base points; they are required for
    ray-fiber integration and set by the scenario materializer.
    """

    base: np.ndarray  # (k, n+1)
    directions: np.ndarray  # (k, n+1), unit
    h_minus: float
    h_plus: float
    level: float
    manifold: ManifoldParams
    potential: Optional[Potential] = None
    normals: Optional[np.ndarray] = None
    base_weights: Optional[np.ndarray] = None
    direction_field: Optional[Callable[[np.ndarray], np.ndarray]] = None
    membership: Optional[Callable[[np.ndarray], bool]] = None
    axis: Optional[np.ndarray] = None
    colat_range: Optional[tuple[float, float]] = None
    oracle_density: Optional[Callable[[float], float]] = None
    rays: Optional[list] = None
    ray_window: Optional[tuple[float, float]] = None  # common t-span of all rays

    def __post_init__(self):
        if not (self.h_minus < 0.0 < self.h_plus):
            raise WindowOrderError(
                f"window must satisfy h- < 0 < h+, got [{self.h_minus}, {self.h_plus}]"
            )
        self.base = np.atleast_2d(np.asarray(self.base, dtype=float))
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if self.normals is None:
            self.normals = self.directions
        else:
            self.normals = np.atleast_2d(np.asarray(self.normals, dtype=float))

    @property
    def n_base(self) -> int:
        return self.base.shape[0]

    def direction_at(self, x: np.ndarray) -> np.ndarray:
        if self.direction_field is not None:
            return self.direction_field(x)
        if self.potential is not None:
            return cone_direction_field(self.potential)(x)
        # fall back to the stored direction of the nearest base point
        i = int(
            np.argmin([distance(x, b, self.manifold) for b in self.base])
        )
        return self.directions[i]

    def base_index(self, y: np.ndarray, tol: float = 1e-7) -> int:
        dists = [distance(y, b, self.manifold) for b in self.base]
        i = int(np.argmin(dists))
        if dists[i] > tol * max(1.0, self.manifold.diameter):
            raise ValueError("point is not a base point of this cylinder")
        return i


def cone_direction_field(u: Potential) -> Callable[[np.ndarray], np.ndarray]:
    """Unit vector field toward the dominating cone apex (= grad u)."""

    def field(x: np.ndarray) -> np.ndarray:
        idx = u.argmax(x)
        if len(idx) != 1:
            raise AmbiguousDirectionError("direction undefined on a cell boundary")
        a = u.anchors[idx[0]]
        d = distance(x, a, u.manifold)
        if d <= APEX_TOL:
            raise AmbiguousDirectionError("direction undefined at an anchor apex")
        return log_map(x, a, u.manifold).vec / d

    return field


def build_cylinder(
    sheaf: SheafSet,
    h_minus: float,
    h_plus: float,
    potential: Optional[Potential] = None,
    cfg: RayTraceConfig = RayTraceConfig(),
) -> CylinderSet:
    """Cylinder over the sheaf base; every member ray must cover the window
    [h- - eps_ray, h+ + eps_ray] relative to the base level."""
    if not (h_minus < 0.0 < h_plus):
        raise WindowOrderError(
            f"window must satisfy h- < 0 < h+, got [{h_minus}, {h_plus}]"
        )
    bad = [
        i
        for i, ray in enumerate(sheaf.member_rays)
        if not (ray.t_lower <= h_minus - cfg.eps_ray and ray.t_upper >= h_plus + cfg.eps_ray)
    ]
    if bad:
        raise InsufficientRayLengthError(
            f"{len(bad)} base rays do not cover the window plus margin", bad
        )
    m = sheaf.member_rays[0].manifold
    base = np.vstack([np.asarray(p) for p in sheaf.base_points])
    dirs = np.vstack([r.direction.vec for r in sheaf.member_rays])
    span = (
        max(r.t_lower for r in sheaf.member_rays),
        min(r.t_upper for r in sheaf.member_rays),
    )
    return CylinderSet(
        base=base,
        directions=dirs,
        h_minus=h_minus,
        h_plus=h_plus,
        level=sheaf.level,
        manifold=m,
        potential=potential,
        rays=list(sheaf.member_rays),
        ray_window=span,
    )


def flow(cyl: CylinderSet, y: np.ndarray, t: float, tol: float = 1e-12) -> np.ndarray:
    """Phi^t(y) = exp_y(t * direction(y)); u increases by t along the flow."""
    if not (cyl.h_minus - tol <= t <= cyl.h_plus + tol):
        raise OutOfWindowError(f"t={t} outside window [{cyl.h_minus}, {cyl.h_plus}]")
    d = cyl.direction_at(np.asarray(y, dtype=float))
    return exp_map(y, t * d, cyl.manifold)
