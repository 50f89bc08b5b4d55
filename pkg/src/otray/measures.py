"""Discrete measures, the desk-scale Kantorovich dual solver, and the
max-of-cones potential with its subdifferential."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleError, UnbalancedError
from .manifold import ManifoldParams, distance, validate_point

ATOM_SEPARATION = 1e-9
TIE_TOL = 1e-10
LIPSCHITZ_SLACK = 1e-9


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud on the sphere; masses positive, atoms distinct."""

    points: np.ndarray  # (k, n+1)
    masses: np.ndarray  # (k,)

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def validate(self, m: ManifoldParams) -> None:
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.masses, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != w.shape[0]:
            raise ValueError("points and masses must have matching leading dimension")
        if np.any(w <= 0):
            raise ValueError("all masses must be positive")
        for p in pts:
            validate_point(p, m)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if distance(pts[i], pts[j], m) <= ATOM_SEPARATION:
                    raise ValueError(f"atoms {i} and {j} coincide")


def dirac(point: np.ndarray, mass: float = 1.0) -> DiscreteMeasure:
    return DiscreteMeasure(np.atleast_2d(np.asarray(point, dtype=float)), np.array([mass]))


@dataclass(frozen=True)
class Potential:
    """1-Lipschitz function represented by anchors and the max-of-cones rule:
    u(x) = max_i { value_i - d(x, a_i) }."""

    anchors: np.ndarray  # (k, n+1)
    values: np.ndarray  # (k,)
    manifold: ManifoldParams

    def _cone_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array(
            [self.values[i] - distance(x, self.anchors[i], self.manifold)
             for i in range(len(self.values))]
        )

    def __call__(self, x: np.ndarray) -> float:
        return float(np.max(self._cone_values(x)))

    def argmax(self, x: np.ndarray, tol: float = TIE_TOL) -> list[int]:
        cv = self._cone_values(x)
        top = np.max(cv)
        return [int(i) for i in np.flatnonzero(cv >= top - tol)]

    def lipschitz_defect(self) -> float:
        """Max over anchor pairs of |v_i - v_j| - d(a_i, a_j); <= 0 means
        the anchor data are consistent with a 1-Lipschitz function."""
        worst = -np.inf
        k = len(self.values)
        for i in range(k):
            for j in range(i + 1, k):
                d = distance(self.anchors[i], self.anchors[j], self.manifold)
                worst = max(worst, abs(self.values[i] - self.values[j]) - d)
        return float(worst)

    def validate(self) -> None:
        if self.lipschitz_defect() > LIPSCHITZ_SLACK:
            raise ValueError("anchor values violate the 1-Lipschitz bound")


@dataclass(frozen=True)
class OptimalPairSet:
    """Pairs (x, y) with u(x) - u(y) = d(x, y) up to tolerance."""

    pairs: list = field(default_factory=list)  # list of (x, y) point pairs
    tolerance: float = 1e-9


def cone_extension(p: Potential, x: np.ndarray) -> float:
    """u(x) = max_i { value_i - d(x, a_i) }."""
    return p(x)


def argmax_cone(p: Potential, x: np.ndarray, tol: float = TIE_TOL) -> list[int]:
    """Indices of cones attaining the max at x; >1 index means x lies on a
    cell boundary."""
    return p.argmax(x, tol)


def subdifferential_pairs(u: Potential, X, Y, tol: float) -> OptimalPairSet:
    pairs = []
    for x in X:
        ux = u(x)
        for y in Y:
            if abs(ux - u(y) - distance(x, y, u.manifold)) <= tol:
                pairs.append((np.asarray(x, dtype=float), np.asarray(y, dtype=float)))
    return OptimalPairSet(pairs, tol)


def lipschitz_violation(u: Potential, samples) -> float:
    """Max over sample pairs of |u(x)-u(y)| - d(x,y); 0 for < 2 samples."""
    samples = list(samples)
    if len(samples) < 2:
        return 0.0
    vals = [u(x) for x in samples]
    worst = -np.inf
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            d = distance(samples[i], samples[j], u.manifold)
            worst = max(worst, abs(vals[i] - vals[j]) - d)
    return float(worst)


def _merge_supports(mu: DiscreteMeasure, nu: DiscreteMeasure, m: ManifoldParams):
    """Union of supports with coefficients mu_i - nu_i; coincident atoms of
    mu and nu are merged so the LP sees one variable per location."""
    pts: list[np.ndarray] = []
    coef: list[float] = []

    def push(p, w):
        for i, q in enumerate(pts):
            if distance(p, q, m) <= ATOM_SEPARATION:
                coef[i] += w
                return
        pts.append(np.asarray(p, dtype=float))
        coef.append(w)

    for p, w in zip(mu.points, mu.masses):
        push(p, float(w))
    for q, w in zip(nu.points, nu.masses):
        push(q, -float(w))
    return np.vstack(pts), np.asarray(coef)


def solve_kantorovich_dual(
    mu: DiscreteMeasure, nu: DiscreteMeasure, m: ManifoldParams
) -> tuple[Potential, float]:
    """Maximize sum_i c_i u_i over u with u_a - u_b <= d(a, b) for every
    ordered anchor pair; returns the optimal potential and W1(mu, nu)."""
    if abs(mu.total - nu.total) > 1e-10:
        raise UnbalancedError(f"totals differ: {mu.total} vs {nu.total}")
    anchors, coef = _merge_supports(mu, nu, m)
    k = len(coef)
    if k == 1:
        return Potential(anchors, np.zeros(1), m), 0.0

    dmat = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            dmat[i, j] = dmat[j, i] = distance(anchors[i], anchors[j], m)

    rows = []
    rhs = []
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            row = np.zeros(k)
            row[i] = 1.0
            row[j] = -1.0
            rows.append(row)
            rhs.append(dmat[i, j])
    # pin u_0 = 0: the objective is shift-invariant because sum(coef) = 0
    bounds = [(0.0, 0.0)] + [(-2.0 * m.diameter, 2.0 * m.diameter)] * (k - 1)
    res = linprog(
        -coef, A_ub=np.vstack(rows), b_ub=np.asarray(rhs), bounds=bounds, method="highs"
    )
    if not res.success:
        raise InfeasibleError(f"dual LP solver breakdown: {res.message}")
    return Potential(anchors, np.asarray(res.x), m), float(-res.fun)


def primal_transport_cost(
    mu: DiscreteMeasure, nu: DiscreteMeasure, m: ManifoldParams
) -> float:
    """Kantorovich primal optimum over couplings Pi(mu, nu) on the complete
    bipartite graph; the independent cross-check for the dual solver."""
    if abs(mu.total - nu.total) > 1e-10:
        raise UnbalancedError(f"totals differ: {mu.total} vs {nu.total}")
    a, b = len(mu.masses), len(nu.masses)
    cost = np.array(
        [[distance(mu.points[i], nu.points[j], m) for j in range(b)] for i in range(a)]
    ).ravel()
    A_eq = []
    for i in range(a):
        row = np.zeros(a * b)
        row[i * b : (i + 1) * b] = 1.0
        A_eq.append(row)
    for j in range(b):
        row = np.zeros(a * b)
        row[j::b] = 1.0
        A_eq.append(row)
    b_eq = np.concatenate([mu.masses, nu.masses])
    res = linprog(cost, A_eq=np.vstack(A_eq), b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise InfeasibleError(f"primal LP solver breakdown: {res.message}")
    return float(res.fun)
