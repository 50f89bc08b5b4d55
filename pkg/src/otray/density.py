"""Ray densities: numeric (n-1)-Jacobians of the cylinder flow, the
closed-form contraction Jacobian with angular correction, pushforward
sandwich factors, and the density field D(t, y).

On the constant-curvature model the comparison inequalities are equalities,
so the closed forms double as exact oracles for the numeric Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, WindowOrderError
from .manifold import ManifoldParams, exp_map, s_K, tangent_frame
from .rays import CylinderSet

DEFAULT_GRID = 129  # power of two plus one, keeps Richardson halving exact
FD_STEP_FACTOR = 1e-5  # h_fd = factor * pi/sqrt(K)


def default_fd_step(m: ManifoldParams) -> float:
    return FD_STEP_FACTOR * m.diameter


def jacobian_flow_numeric(
    cyl: CylinderSet, y: np.ndarray, t: float, h_fd: Optional[float] = None
) -> float:
    """(n-1)-Jacobian of Phi^t restricted to the base slice at y.

    Central differences along an orthonormal tangent frame of the slice
    (the orthogonal complement of the slice normal), then the square root
    of the Gram determinant.
    """
    m = cyl.manifold
    if h_fd is None:
        h_fd = default_fd_step(m)
    y = np.asarray(y, dtype=float)
    i = cyl.base_index(y)
    frame = tangent_frame(y, m, exclude=[cyl.normals[i]])  # raises SingularFrameError

    def push(p):
        return exp_map(p, t * cyl.direction_at(p), m)

    cols = []
    for e in frame:
        plus = push(exp_map(y, h_fd * e, m))
        minus = push(exp_map(y, -h_fd * e, m))
        cols.append((plus - minus) / (2.0 * h_fd))
    G = np.array([[float(np.dot(a, b)) for b in cols] for a in cols])
    det = np.linalg.det(G)
    return float(np.sqrt(max(det, 0.0)))


def jacobian_reverse_numeric(
    cyl: CylinderSet, y: np.ndarray, t: float, h_fd: Optional[float] = None
) -> float:
    """Jacobian of the reversed flow from Phi^t(y) back to the base slice.

    Valid for true cylinders, where the flowed slice stays orthogonal to
    the rays; pairs with jacobian_flow_numeric via J_fwd * J_rev = 1.
    """
    m = cyl.manifold
    if h_fd is None:
        h_fd = default_fd_step(m)
    y = np.asarray(y, dtype=float)
    yt = exp_map(y, t * cyl.direction_at(y), m)
    frame = tangent_frame(yt, m, exclude=[cyl.direction_at(yt)])

    def pull(p):
        return exp_map(p, -t * cyl.direction_at(p), m)

    cols = []
    for e in frame:
        plus = pull(exp_map(yt, h_fd * e, m))
        minus = pull(exp_map(yt, -h_fd * e, m))
        cols.append((plus - minus) / (2.0 * h_fd))
    G = np.array([[float(np.dot(a, b)) for b in cols] for a in cols])
    return float(np.sqrt(max(np.linalg.det(G), 0.0)))


def jacobian_bound_formula(r: float, t: float, theta: float, m: ManifoldParams) -> float:
    """Contraction-toward-apex Jacobian rho^(n-1) sqrt(cos^2 th + sin^2 th / rho^2)
    with rho = s_K(r-t)/s_K(r); exact on the constant-curvature model."""
    if not 0.0 <= theta <= np.pi / 2.0:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    if not 0.0 < r < m.diameter:
        raise ValueError(f"apex distance r must lie in (0, diameter), got {r}")
    if t < 0.0:
        raise ValueError(f"contraction parameter t must be >= 0, got {t}")
    if t >= r:
        raise DomainError(f"contraction past the apex: t={t} >= r={r}")
    rho = s_K(r - t, m.K) / s_K(r, m.K)
    return float(
        rho ** (m.n - 1) * np.sqrt(np.cos(theta) ** 2 + np.sin(theta) ** 2 / rho**2)
    )


def pushforward_factors(
    s: float, t: float, h_minus: float, h_plus: float, m: ManifoldParams
) -> tuple[float, float]:
    """Sandwich factors (lower, upper) bounding H^(n-1)(Phi^t S) relative to
    H^(n-1)(Phi^s S) for h- < s <= t < h+."""
    if not (h_minus < s <= t < h_plus):
        raise WindowOrderError(
            f"need h- < s <= t < h+, got h-={h_minus}, s={s}, t={t}, h+={h_plus}"
        )
    lower = (s_K(h_plus - t, m.K) / s_K(h_plus - s, m.K)) ** (m.n - 1)
    upper = (s_K(t - h_minus, m.K) / s_K(s - h_minus, m.K)) ** (m.n - 1)
    return float(lower), float(upper)


@dataclass
class DensityField:
    """D(t, y) sampled on base points x uniform t-grid; values(., t=0) = 1."""

    cylinder: CylinderSet
    t_grid: np.ndarray  # (T,)
    values: np.ndarray  # (n_base, T), positive

    def profile(self, y_index: int) -> np.ndarray:
        return self.values[y_index]


def density_D(
    cyl: CylinderSet, grid: int = DEFAULT_GRID, h_fd: Optional[float] = None
) -> DensityField:
    """Populate D(t, y) = flow Jacobian over a uniform window grid."""
    t_grid = np.linspace(cyl.h_minus, cyl.h_plus, grid)
    values = np.empty((cyl.n_base, grid))
    for i in range(cyl.n_base):
        y = cyl.base[i]
        for j, t in enumerate(t_grid):
            values[i, j] = jacobian_flow_numeric(cyl, y, t, h_fd)
    return DensityField(cyl, t_grid, values)


def lipschitz_modulus_t(field: DensityField, y_index: int) -> float:
    """Max discrete |dD/dt| over adjacent grid nodes."""
    dt = field.t_grid[1] - field.t_grid[0]
    return float(np.max(np.abs(np.diff(field.values[y_index]))) / dt)


def lipschitz_bound_t(field: DensityField, y_index: int) -> float:
    """Upper bound sup_t D * (n-1) * max(|d/dt log s_K(t-h-)|, |d/dt log s_K(h+-t)|)
    evaluated with the widest window the base rays support."""
    cyl = field.cylinder
    m = cyl.manifold
    if cyl.ray_window is not None:
        h_lo, h_hi = cyl.ray_window
    else:
        h_lo, h_hi = cyl.h_minus, cyl.h_plus
    t = field.t_grid
    rk = np.sqrt(m.K)
    with np.errstate(divide="ignore"):
        g_lo = np.abs(rk / np.tan(rk * (t - h_lo)))
        g_hi = np.abs(rk / np.tan(rk * (h_hi - t)))
    rate = np.maximum(g_lo, g_hi)
    sup_d = float(np.max(field.values[y_index]))
    return sup_d * (m.n - 1) * float(np.max(rate))
