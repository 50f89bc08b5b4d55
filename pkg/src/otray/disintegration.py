"""Volume integrals versus nested ray-fiber integrals with density D.

The volume side uses Monte-Carlo on the sphere (stratified along a zonal
axis when one is available) or a deterministic latitude-longitude product
grid; the ray side uses base-point quadrature times Simpson in t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson, trapezoid

from .errors import FieldMismatchError, OverlapError
from .density import DensityField, density_D
from .manifold import ManifoldParams, exp_map, s_K, tangent_frame
from .rays import CylinderSet

DIV_GUARD = 1e-12
CONTIGUITY_TOL = 1e-6


@dataclass(frozen=True)
class TestFunction:
    """Bounded test function on the sphere, one of a small closed-form family.

    kinds and params:
      constant          {"value": c}
      band-indicator    {"axis": point, "r_lo": colat, "r_hi": colat}
      zonal-polynomial  {"axis": point, "coeffs": [c0, c1, ...]}  (poly in cos colat)
      zonal-bump        {"axis": point, "r_lo": colat, "r_hi": colat}  (C^1, vanishes outside)
      product-chart     {"axis": point, "coeffs": [...], "m_lon": int, "phase": f}

    Indicators take the value 1/2 exactly on their boundary circles, so
    edge-aligned trapezoid quadrature keeps second-order accuracy.
    """

    kind: str
    params: dict

    def evaluate(self, points: np.ndarray, m: ManifoldParams) -> np.ndarray:
        if self.kind not in (
            "constant", "band-indicator", "zonal-polynomial", "zonal-bump",
            "product-chart",
        ):
            raise ValueError(f"unknown test function kind {self.kind!r}")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "constant":
            return np.full(pts.shape[0], float(self.params["value"]))
        axis = np.asarray(self.params["axis"], dtype=float)
        cosc = np.clip(m.K * pts @ axis, -1.0, 1.0)  # cos of colatitude angle
        if self.kind == "band-indicator":
            colat = np.arccos(cosc) / np.sqrt(m.K)
            lo, hi = float(self.params["r_lo"]), float(self.params["r_hi"])
            out = ((colat >= lo) & (colat <= hi)).astype(float)
            edge = 1e-9 * m.diameter
            out[np.abs(colat - lo) <= edge] = 0.5
            out[np.abs(colat - hi) <= edge] = 0.5
            return out
        if self.kind == "zonal-bump":
            colat = np.arccos(cosc) / np.sqrt(m.K)
            lo, hi = float(self.params["r_lo"]), float(self.params["r_hi"])
            s = (colat - lo) / (hi - lo)
            return np.where((s <= 0.0) | (s >= 1.0), 0.0, np.sin(np.pi * s) ** 2)
        zonal = np.polynomial.polynomial.polyval(cosc, np.asarray(self.params["coeffs"]))
        if self.kind == "zonal-polynomial":
            return zonal
        if self.kind == "product-chart":
            f = tangent_frame(axis, m)
            lon = np.arctan2(pts @ f[1], pts @ f[0])
            return zonal * np.cos(self.params["m_lon"] * lon + self.params["phase"])
        raise ValueError(f"unknown test function kind {self.kind!r}")

    def __call__(self, x: np.ndarray, m: ManifoldParams) -> float:
        return float(self.evaluate(x, m)[0])


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "monte-carlo"  # or "product-grid"
    samples: int = 100_000
    seed: int = 42

    def __post_init__(self):
        if self.method not in ("monte-carlo", "product-grid"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.samples < 1:
            raise ValueError("samples must be positive")


def _as_cylinder_list(region) -> list[CylinderSet]:
    return [region] if isinstance(region, CylinderSet) else list(region)


def cylinder_contains(cyl: CylinderSet, x: np.ndarray) -> bool:
    """Membership test; falls back to a flow-back-to-base proximity check."""
    if cyl.membership is not None:
        return bool(cyl.membership(x))
    if cyl.potential is None:
        raise ValueError("cylinder has neither a membership test nor a potential")
    tau = cyl.potential(x) - cyl.level
    if not (cyl.h_minus <= tau <= cyl.h_plus):
        return False
    from .manifold import distance

    y0 = exp_map(x, -tau * cyl.direction_at(x), cyl.manifold)
    dmin = min(distance(y0, b, cyl.manifold) for b in cyl.base)
    return dmin <= _base_spacing(cyl)


def _base_spacing(cyl: CylinderSet) -> float:
    from .manifold import distance

    if cyl.n_base < 2:
        return 1e-6 * cyl.manifold.diameter
    gaps = []
    for i in range(cyl.n_base):
        gaps.append(
            min(
                distance(cyl.base[i], cyl.base[j], cyl.manifold)
                for j in range(cyl.n_base)
                if j != i
            )
        )
    return max(gaps)


def _region_indicator(cylinders, pts: np.ndarray, m: ManifoldParams) -> np.ndarray:
    # fast zonal path: every cylinder is a full band around a common axis
    if all(c.colat_range is not None and c.axis is not None for c in cylinders):
        axis = cylinders[0].axis
        if all(np.allclose(c.axis, axis) for c in cylinders):
            colat = np.arccos(np.clip(m.K * pts @ axis, -1.0, 1.0)) / np.sqrt(m.K)
            ind = np.zeros(pts.shape[0], dtype=bool)
            for c in cylinders:
                lo, hi = c.colat_range
                ind |= (colat >= lo) & (colat <= hi)
            return ind.astype(float)
    return np.array(
        [float(any(cylinder_contains(c, x) for c in cylinders)) for x in pts]
    )


def _sample_sphere_plain(rng, n_samples: int, m: ManifoldParams) -> np.ndarray:
    g = rng.standard_normal((n_samples, m.n + 1))
    return m.radius * g / np.linalg.norm(g, axis=1, keepdims=True)


def integrate_volume(
    phi: TestFunction, region, q: QuadratureSpec, m: ManifoldParams
) -> tuple[float, float]:
    """Integral of phi over the region, with estimator standard error.

    Monte-Carlo is uniform on the sphere restricted to the region; on S^2
    with a zonal region axis the sampler stratifies over the axis coordinate
    (still unbiased, since surface area is uniform in it).
    """
    cylinders = _as_cylinder_list(region)
    if q.method == "product-grid":
        val = sum(_product_grid_integral(phi, c, q, m) for c in cylinders)
        return val, 0.0

    rng = np.random.default_rng(q.seed)
    area = m.total_area()
    axis = cylinders[0].axis if cylinders and cylinders[0].axis is not None else None
    if m.n == 2 and axis is not None:
        return _stratified_zonal_mc(phi, cylinders, q, m, rng, axis, area)
    pts = _sample_sphere_plain(rng, q.samples, m)
    g = phi.evaluate(pts, m) * _region_indicator(cylinders, pts, m)
    val = area * float(np.mean(g))
    err = area * float(np.std(g, ddof=1)) / np.sqrt(q.samples)
    return val, err


def _stratified_zonal_mc(phi, cylinders, q, m, rng, axis, area):
    n_strata = max(1, min(1024, q.samples // 32))
    edges = np.linspace(-1.0, 1.0, n_strata + 1)
    per = np.full(n_strata, q.samples // n_strata)
    per[: q.samples % n_strata] += 1
    f = tangent_frame(axis, m)  # two unit vectors orthogonal to the axis
    ahat = axis * np.sqrt(m.K)
    means = np.empty(n_strata)
    variances = np.empty(n_strata)
    for s in range(n_strata):
        ns = int(per[s])
        z = rng.uniform(edges[s], edges[s + 1], ns)
        lon = rng.uniform(0.0, 2.0 * np.pi, ns)
        rho = np.sqrt(np.maximum(0.0, 1.0 - z**2))
        pts = m.radius * (
            np.outer(rho * np.cos(lon), f[0])
            + np.outer(rho * np.sin(lon), f[1])
            + np.outer(z, ahat)
        )
        g = phi.evaluate(pts, m) * _region_indicator(cylinders, pts, m)
        means[s] = np.mean(g)
        variances[s] = np.var(g, ddof=1) / ns if ns > 1 else 0.0
    w = np.diff(edges) / 2.0  # strata have equal surface-area weight in z
    val = area * float(np.sum(w * means))
    err = area * float(np.sqrt(np.sum(w**2 * variances)))
    return val, err


def _product_grid_integral(phi, cyl: CylinderSet, q: QuadratureSpec, m: ManifoldParams):
    """Deterministic latitude-longitude quadrature over a zonal band on S^2."""
    if m.n != 2:
        raise ValueError("product-grid quadrature is implemented for n = 2 only")
    if cyl.colat_range is None or cyl.axis is None:
        raise ValueError("product-grid quadrature needs a zonal cylinder (axis + band)")
    lo, hi = cyl.colat_range
    n_side = max(65, int(np.sqrt(q.samples)) | 1)  # odd for Simpson
    colat = np.linspace(lo, hi, n_side)
    lon = np.linspace(0.0, 2.0 * np.pi, n_side, endpoint=False)
    f = tangent_frame(cyl.axis, m)
    ahat = cyl.axis * np.sqrt(m.K)
    ang = np.sqrt(m.K) * colat
    ring_vals = np.empty(n_side)
    for i, (a, w_r) in enumerate(zip(ang, s_K(colat, m.K))):
        pts = m.radius * (
            np.outer(np.sin(a) * np.cos(lon), f[0])
            + np.outer(np.sin(a) * np.sin(lon), f[1])
            + np.cos(a) * ahat
        )
        ring_vals[i] = w_r * np.mean(phi.evaluate(pts, m)) * 2.0 * np.pi
    return float(simpson(ring_vals, x=colat))


def integrate_rays(
    phi: TestFunction, cyl: CylinderSet, field: DensityField, q: QuadratureSpec
) -> float:
    """Nested integral: base quadrature of the Simpson t-integral of
    phi(Phi^t(y)) D(t, y)."""
    if field.cylinder is not cyl:
        raise FieldMismatchError("density field was built on a different cylinder")
    if cyl.base_weights is None:
        raise ValueError("cylinder has no base quadrature weights")
    m = cyl.manifold
    # discontinuous integrands get trapezoid (exact half-weights at jumps
    # landing on nodes); smooth ones get Simpson
    inner_rule = trapezoid if phi.kind == "band-indicator" else simpson
    total = 0.0
    for i in range(cyl.n_base):
        y = cyl.base[i]
        d = cyl.direction_at(y)
        pts = np.array([exp_map(y, t * d, m) for t in field.t_grid])
        inner = inner_rule(phi.evaluate(pts, m) * field.values[i], x=field.t_grid)
        total += float(cyl.base_weights[i]) * float(inner)
    return total


@dataclass(frozen=True)
class ResidualReport:
    scenario: str
    phi_kind: str
    lhs: float
    rhs: float
    residual: float
    lhs_stderr: float
    samples: int
    seed: int


def disintegration_residual(
    phi: TestFunction, scenario, q: QuadratureSpec, grid: Optional[int] = None
) -> ResidualReport:
    """Relative residual |LHS - RHS| / max(|LHS|, 1e-12) between the volume
    integral over the scenario's cylinder cover and the ray-fiber integral."""
    from .scenarios import materialize

    _, cylinders = materialize(scenario)
    m = scenario.manifold
    lhs, err = integrate_volume(phi, cylinders, q, m)
    rhs = 0.0
    for cyl in cylinders:
        field = density_D(cyl, grid) if grid else density_D(cyl)
        rhs += integrate_rays(phi, cyl, field, q)
    residual = abs(lhs - rhs) / max(abs(lhs), DIV_GUARD)
    return ResidualReport(
        scenario.name, phi.kind, lhs, rhs, residual, err, q.samples, q.seed
    )


def merge_cylinders(cylinders: list[CylinderSet]) -> CylinderSet:
    """Union of contiguous same-sheaf cylinders as a single cylinder anchored
    at the lowest base level."""
    cyls = sorted(cylinders, key=lambda c: c.level)
    for a, b in zip(cyls, cyls[1:]):
        gap = (b.level + b.h_minus) - (a.level + a.h_plus)
        if abs(gap) > CONTIGUITY_TOL:
            raise ValueError(f"cylinders are not contiguous: gap {gap}")
    first, last = cyls[0], cyls[-1]
    return CylinderSet(
        base=first.base,
        directions=first.directions,
        h_minus=first.h_minus,
        h_plus=(last.level + last.h_plus) - first.level,
        level=first.level,
        manifold=first.manifold,
        potential=first.potential,
        normals=first.normals,
        base_weights=first.base_weights,
        direction_field=first.direction_field,
        membership=None,
        axis=first.axis,
        colat_range=None,
        ray_window=first.ray_window,
    )


def additivity_check(
    phis: list[TestFunction],
    cylinders: list[CylinderSet],
    q: QuadratureSpec,
    grid: Optional[int] = None,
) -> float:
    """Max over phi of |sum_j RHS(phi, cyl_j) - RHS(phi, union)|."""
    iv = sorted(
        [(c.level + c.h_minus, c.level + c.h_plus) for c in cylinders]
    )
    for (alo, ahi), (blo, bhi) in zip(iv, iv[1:]):
        if blo < ahi - 1e-9:
            raise OverlapError(f"u-windows overlap: [{alo},{ahi}] and [{blo},{bhi}]")
    union = merge_cylinders(cylinders)
    fields = {id(c): density_D(c, grid) if grid else density_D(c) for c in cylinders}
    union_field = density_D(union, grid) if grid else density_D(union)
    worst = 0.0
    for phi in phis:
        parts = sum(integrate_rays(phi, c, fields[id(c)], q) for c in cylinders)
        whole = integrate_rays(phi, union, union_field, q)
        worst = max(worst, abs(parts - whole))
    return worst
