"""Divergence of the max-of-cones ray field: exact absolutely continuous
part on the sphere, jump part on modified Voronoi boundaries, the
Green-Gauss identity on single-cone cylinders, and the continuity equation
for the ray density."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .density import DensityField
from .errors import (
    DegenerateGradientError,
    EdgeIntersectsCylinderError,
    NotOnEdgeError,
)
from .manifold import ManifoldParams, distance, exp_map, grad_distance, log_map, s_K, tangent_frame
from .measures import Potential
from .rays import CylinderSet

TIE_TOL = 1e-10
ON_EDGE_TOL = 1e-6
EDGE_REFINE_TOL = 1e-8


@dataclass(frozen=True)
class ConeField:
    """Piecewise ray-direction field: inside cell i the unit field points
    toward anchor a_i (the gradient of value_i - d(., a_i))."""

    anchors: np.ndarray  # (k, n+1)
    values: np.ndarray  # (k,)
    manifold: ManifoldParams

    def as_potential(self) -> Potential:
        return Potential(self.anchors, self.values, self.manifold)

    def cell_value(self, i: int, x: np.ndarray) -> float:
        return float(self.values[i] - distance(x, self.anchors[i], self.manifold))

    def direction(self, x: np.ndarray, i: int) -> np.ndarray:
        """d^i(x): unit tangent toward anchor i."""
        t = grad_distance(self.anchors[i], x, self.manifold)
        return -t.vec

    def dominant(self, x: np.ndarray) -> int:
        vals = [self.cell_value(i, x) for i in range(len(self.values))]
        return int(np.argmax(vals))


def divergence_ac_cone(a: np.ndarray, x: np.ndarray, m: ManifoldParams) -> float:
    """div of the field pointing toward a, exact on the sphere:
    -(n-1) sqrt(K) cot(sqrt(K) r)."""
    r = distance(a, x, m)
    if r <= m.antipode_margin or r >= m.diameter - m.antipode_margin:
        raise DegenerateGradientError(f"divergence singular at r={r}")
    rk = np.sqrt(m.K)
    return float(-(m.n - 1) * rk / np.tan(rk * r))


def voronoi_assign(field: ConeField, x: np.ndarray, tol: float = TIE_TOL) -> list[int]:
    vals = np.array([field.cell_value(i, x) for i in range(len(field.values))])
    top = np.max(vals)
    return [int(i) for i in np.flatnonzero(vals >= top - tol)]


def field_divergence_ac(field: ConeField, x: np.ndarray) -> float:
    return divergence_ac_cone(field.anchors[field.dominant(x)], x, field.manifold)


def jump_density(field: ConeField, edge_x: np.ndarray, i: int, j: int) -> float:
    """<d^i - d^j, nu_ij> at a point of the (i, j) cell boundary, with nu_ij
    the unit normal pointing from cell i into cell j."""
    if i == j:
        return 0.0
    gap = field.cell_value(i, edge_x) - field.cell_value(j, edge_x)
    if abs(gap) > ON_EDGE_TOL:
        raise NotOnEdgeError(f"cell values differ by {gap} at the claimed edge point")
    di = field.direction(edge_x, i)
    dj = field.direction(edge_x, j)
    diff = dj - di  # gradient of (f_j - f_i), increases into cell j
    norm = np.linalg.norm(diff)
    if norm == 0.0:
        raise NotOnEdgeError("cells i and j have identical fields at this point")
    nu = diff / norm
    return float(np.dot(di - dj, nu))


def locate_edge(
    field: ConeField, i: int, j: int, x0: np.ndarray, x1: np.ndarray,
    tol: float = EDGE_REFINE_TOL,
) -> np.ndarray:
    """Bisection along the geodesic x0 -> x1 for the sign change of
    f_i - f_j; x0 must lie in cell i's side, x1 in cell j's."""
    m = field.manifold
    lg = log_map(x0, x1, m)

    def g(s: float) -> float:
        x = exp_map(x0, s * lg.vec, m)
        return field.cell_value(i, x) - field.cell_value(j, x)

    lo, hi = 0.0, 1.0
    if g(lo) < 0 or g(hi) > 0:
        raise NotOnEdgeError("endpoints do not bracket the (i, j) boundary")
    span = lg.norm
    while (hi - lo) * span > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return exp_map(x0, 0.5 * (lo + hi) * lg.vec, m)


def _band_nodes(cyl: CylinderSet, n_side: int):
    """Latitude-longitude nodes of a zonal band cylinder on S^2; yields
    (colat values, ring point arrays)."""
    m = cyl.manifold
    if m.n != 2 or cyl.colat_range is None or cyl.axis is None:
        raise ValueError("band quadrature needs a zonal cylinder on S^2")
    lo, hi = cyl.colat_range
    colat = np.linspace(lo, hi, n_side)
    lon = np.linspace(0.0, 2.0 * np.pi, n_side, endpoint=False)
    f = tangent_frame(cyl.axis, m)
    ahat = cyl.axis * np.sqrt(m.K)
    rings = []
    for rho in colat:
        a = np.sqrt(m.K) * rho
        rings.append(
            m.radius
            * (
                np.outer(np.sin(a) * np.cos(lon), f[0])
                + np.outer(np.sin(a) * np.sin(lon), f[1])
                + np.cos(a) * ahat
            )
        )
    return colat, rings


def _ring_points(cyl: CylinderSet, rho: float, n_lon: int) -> np.ndarray:
    m = cyl.manifold
    lon = np.linspace(0.0, 2.0 * np.pi, n_lon, endpoint=False)
    f = tangent_frame(cyl.axis, m)
    ahat = cyl.axis * np.sqrt(m.K)
    a = np.sqrt(m.K) * rho
    return m.radius * (
        np.outer(np.sin(a) * np.cos(lon), f[0])
        + np.outer(np.sin(a) * np.sin(lon), f[1])
        + np.cos(a) * ahat
    )


def green_gauss_residual(
    cyl: CylinderSet, phi, field: ConeField, q, n_side: int = 129,
    fd_step: float = 1e-6,
) -> float:
    """Absolute residual of
    int <grad phi, d> = - int phi (div d)_ac + int_boundary phi <d, n>
    on a single-cone zonal cylinder, all terms by quadrature."""
    m = cyl.manifold
    colat, rings = _band_nodes(cyl, n_side)
    # single-cone precondition: no Voronoi boundary may cross the cylinder
    probe = rings[0][::8]
    dominant = None
    for ring in (rings[0], rings[len(rings) // 2], rings[-1]):
        for x in ring[:: max(1, n_side // 16)]:
            idx = voronoi_assign(field, x, ON_EDGE_TOL)
            if len(idx) > 1 or (dominant is not None and idx[0] != dominant):
                raise EdgeIntersectsCylinderError(
                    "a cell boundary crosses the cylinder"
                )
            dominant = idx[0]
    del probe
    h = fd_step * m.diameter

    def ring_mean(values_fn, ring):
        return float(np.mean([values_fn(x) for x in ring]))

    grad_rows = np.empty(len(colat))
    div_rows = np.empty(len(colat))
    for k, (rho, ring) in enumerate(zip(colat, rings)):
        w = s_K(rho, m.K) * 2.0 * np.pi

        def dir_deriv(x):
            d = field.direction(x, field.dominant(x))
            return (
                phi(exp_map(x, h * d, m), m) - phi(exp_map(x, -h * d, m), m)
            ) / (2.0 * h)

        grad_rows[k] = w * ring_mean(dir_deriv, ring)
        div_rows[k] = w * ring_mean(
            lambda x: phi(x, m) * field_divergence_ac(field, x), ring
        )
    t_grad = float(simpson(grad_rows, x=colat))
    t_div = float(simpson(div_rows, x=colat))

    t_bnd = 0.0
    for rho, sign in ((cyl.colat_range[1], +1.0), (cyl.colat_range[0], -1.0)):
        ring = _ring_points(cyl, rho, n_side)
        circ = 2.0 * np.pi * s_K(rho, m.K)

        def flux(x):
            n_out = sign * grad_distance(cyl.axis, x, m).vec  # outward band normal
            d = field.direction(x, field.dominant(x))
            return phi(x, m) * float(np.dot(d, n_out))

        t_bnd += circ * float(np.mean([flux(x) for x in ring]))

    return abs(t_grad - (-t_div + t_bnd))


def continuity_residual(field: DensityField, cyl: CylinderSet, cone: ConeField) -> float:
    """Max over interior grid nodes of |d_t D - (div d)_ac(Phi^t(y)) D|,
    normalized by max D."""
    m = cyl.manifold
    t = field.t_grid
    dt = t[1] - t[0]
    worst = 0.0
    for i in range(cyl.n_base):
        y = cyl.base[i]
        d = cyl.direction_at(y)
        D = field.values[i]
        for j in range(1, len(t) - 1):
            dD = (D[j + 1] - D[j - 1]) / (2.0 * dt)
            x = exp_map(y, t[j] * d, m)
            worst = max(worst, abs(dD - field_divergence_ac(cone, x) * D[j]))
    return worst / float(np.max(field.values))


def lower_bound_certificate(field: ConeField, region_sample, m: ManifoldParams) -> float:
    """min over samples of (div)_ac minus the comparison floor
    -(n-1) sqrt(K) cot(sqrt(K) d_min); >= 0 certifies the bound."""
    rk = np.sqrt(m.K)
    worst = np.inf
    for x in np.atleast_2d(np.asarray(region_sample, dtype=float)):
        div = field_divergence_ac(field, x)
        d_min = min(distance(a, x, m) for a in field.anchors)
        bound = -(m.n - 1) * rk / np.tan(rk * d_min)
        worst = min(worst, div - bound)
    return float(worst)
