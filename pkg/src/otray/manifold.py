"""Geometry kernels for the round sphere of curvature K embedded in R^(n+1).

Points are (n+1)-vectors of norm 1/sqrt(K).  All maps are closed-form and
global except at antipodes, where the logarithm is guarded by a cut-locus
margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntipodalError, DegenerateGradientError

POINT_TOL = 1e-12
ANTIPODE_MARGIN_FACTOR = 1e-9  # epsilon_antipode = factor * diameter


@dataclass(frozen=True)
class ManifoldParams:
    """Dimension n >= 2 and curvature K > 0 of the model sphere."""

    n: int = 2
    K: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got n={self.n}")
        if not self.K > 0:
            raise ValueError(f"curvature must be positive, got K={self.K}")

    @property
    def radius(self) -> float:
        return 1.0 / np.sqrt(self.K)

    @property
    def diameter(self) -> float:
        return np.pi / np.sqrt(self.K)

    @property
    def antipode_margin(self) -> float:
        return ANTIPODE_MARGIN_FACTOR * self.diameter

    def total_area(self) -> float:
        """Surface measure of the whole sphere, Vol_g(S^n_K)."""
        from scipy.special import gamma

        n = self.n
        return 2.0 * np.pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0) * self.radius**n


@dataclass(frozen=True)
class Tangent:
    """Tangent vector at a base point; <vec, base> = 0 within tolerance."""

    base: np.ndarray
    vec: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def scaled(self, c: float) -> "Tangent":
        return Tangent(self.base, c * self.vec)


def validate_point(coords: np.ndarray, m: ManifoldParams, tol: float = POINT_TOL) -> None:
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (m.n + 1,):
        raise ValueError(f"point must have shape ({m.n + 1},), got {coords.shape}")
    r = np.linalg.norm(coords)
    if abs(r - m.radius) > tol * max(1.0, m.radius):
        raise ValueError(f"point norm {r} differs from radius {m.radius}")


def validate_tangent(t: Tangent, m: ManifoldParams, tol: float = POINT_TOL) -> None:
    validate_point(t.base, m)
    ip = float(np.dot(t.vec, t.base)) * np.sqrt(m.K)
    if abs(ip) > tol * max(1.0, np.linalg.norm(t.vec)):
        raise ValueError(f"tangency violated: <vec, base>*sqrt(K) = {ip}")


def project_to_sphere(coords: np.ndarray, m: ManifoldParams) -> np.ndarray:
    """Rescale to the sphere; cheap drift control after exp-map chains."""
    coords = np.asarray(coords, dtype=float)
    return coords * (m.radius / np.linalg.norm(coords))


def s_K(t, K: float):
    """Comparison function sin(sqrt(K) t)/sqrt(K); odd, positive on (0, pi/sqrt(K))."""
    rk = np.sqrt(K)
    return np.sin(rk * np.asarray(t, dtype=float)) / rk


def ds_K(t, K: float):
    """Derivative cos(sqrt(K) t); satisfies K*s_K^2 + ds_K^2 = 1."""
    return np.cos(np.sqrt(K) * np.asarray(t, dtype=float))


def distance(p: np.ndarray, q: np.ndarray, m: ManifoldParams) -> float:
    """Geodesic distance, accurate near both 0 and the diameter.

    Uses atan2 of the normal/parallel decomposition instead of a bare
    arccos, which loses half the digits near coincident points.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = m.K * float(np.dot(p, q))  # cos of the central angle
    c = min(1.0, max(-1.0, c))
    perp = q * np.sqrt(m.K) - c * p * np.sqrt(m.K)
    s = float(np.linalg.norm(perp))
    return np.arctan2(s, c) / np.sqrt(m.K)


def exp_map(p: np.ndarray, v, m: ManifoldParams) -> np.ndarray:
    """Geodesic from p with initial velocity v, evaluated at arclength |v|."""
    if isinstance(v, Tangent):
        v = v.vec
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return p.copy()
    out = np.cos(np.sqrt(m.K) * nv) * p + s_K(nv, m.K) * (v / nv)
    return project_to_sphere(out, m)


def log_map(p: np.ndarray, q: np.ndarray, m: ManifoldParams) -> Tangent:
    """Inverse of exp_map at p; raises AntipodalError at the cut locus."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = distance(p, q, m)
    if d >= m.diameter - m.antipode_margin:
        raise AntipodalError(
            f"log_map undefined: d(p,q)={d} within cut-locus margin of {m.diameter}"
        )
    if d == 0.0:
        return Tangent(p, np.zeros_like(p))
    w = q - m.K * float(np.dot(p, q)) * p  # component of q orthogonal to p
    nw = np.linalg.norm(w)
    if nw == 0.0:  # q == p up to rounding
        return Tangent(p, np.zeros_like(p))
    return Tangent(p, (d / nw) * w)


def grad_distance(a: np.ndarray, x: np.ndarray, m: ManifoldParams) -> Tangent:
    """Gradient of x -> d(a, x); unit norm, radially outward from a."""
    d = distance(a, x, m)
    if d <= m.antipode_margin or d >= m.diameter - m.antipode_margin:
        raise DegenerateGradientError(
            f"distance gradient singular at r={d} (a coincident or antipodal)"
        )
    lg = log_map(x, a, m)
    return Tangent(np.asarray(x, dtype=float), -lg.vec / d)


def tangent_frame(p: np.ndarray, m: ManifoldParams, exclude=None) -> np.ndarray:
    """Deterministic orthonormal basis of T_p M, optionally orthogonal to
    the extra unit vectors in `exclude` (rows).  Returns rows of shape
    (n - len(exclude), n+1)."""
    p = np.asarray(p, dtype=float)
    rows = [p / np.linalg.norm(p)]
    if exclude is not None:
        ex = np.atleast_2d(np.asarray(exclude, dtype=float))
        for r in ex:
            rows.append(r / np.linalg.norm(r))
    A = np.vstack(rows)
    # null space of A = complement of span{p, exclude...}
    _, sv, vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10))
    basis = vt[rank:]
    want = m.n + 1 - A.shape[0]
    if basis.shape[0] != want:
        from .errors import SingularFrameError

        raise SingularFrameError(
            f"frame degenerate: expected {want} directions, found {basis.shape[0]}"
        )
    return basis
