"""The verification checks behind `otray run`.

Each check measures one quantitative statement about the scenario's ray
decomposition, returns a single report row (metric value, tolerance, pass
flag), and may attach plot tables (x/y columns) for the report writer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .density import jacobian_flow_numeric, density_D, lipschitz_bound_t, \
    lipschitz_modulus_t, jacobian_bound_formula, pushforward_factors
from .disintegration import QuadratureSpec, TestFunction, integrate_rays, integrate_volume
from .divergence import ConeField, continuity_residual, green_gauss_residual, \
    lower_bound_certificate
from .errors import UnknownCheckError, ValidationError
from .manifold import ManifoldParams, s_K
from .measures import DiscreteMeasure, primal_transport_cost, solve_kantorovich_dual
from .rays import CylinderSet, cone_direction_field
from .scenarios import Scenario, make_tilted_slice, materialize, point_at, pole


@dataclass(frozen=True)
class CheckRow:
    check: str
    scenario: str
    metric: str
    value: float
    tolerance: float
    passed: bool
    samples: int
    seed: int
    wall_ms: int


@dataclass
class CheckResult:
    row: CheckRow
    plots: dict = field(default_factory=dict)  # name -> (header list, row list)


def _require_band(scn: Scenario, check: str):
    if scn.kind not in ("radial-band", "two-band"):
        raise ValidationError(f"check {check!r} needs a band scenario, got {scn.kind!r}")


def _cone_field(potential) -> ConeField:
    return ConeField(potential.anchors, potential.values, potential.manifold)


def _phi_battery(scn: Scenario) -> list[TestFunction]:
    m = scn.manifold
    axis = pole(m)
    p = scn.params
    r_lo = float(p["r1"])
    r_hi = float(p["r2"] if scn.kind == "radial-band" else p["r3"])
    w = r_hi - r_lo
    # indicator edges at the quarter points of the colatitude range: these
    # are interior t-grid nodes of every cylinder window, where the 1/2
    # boundary value keeps the trapezoid rule second-order accurate
    lo, hi = r_lo + w / 4.0, r_hi - w / 4.0
    return [
        TestFunction("constant", {"value": 1.0}),
        TestFunction("zonal-polynomial", {"axis": axis, "coeffs": [0.0, 1.0]}),
        TestFunction("band-indicator", {"axis": axis, "r_lo": lo, "r_hi": hi}),
    ]


def check_disintegration(scn, q, grid, tol_scale):
    """Volume integral over the cylinder cover vs the nested ray integral,
    worst relative residual over the test-function battery."""
    _require_band(scn, "disintegration")
    m = scn.manifold
    _, cylinders = materialize(scn)
    fields = [density_D(c, grid) for c in cylinders]
    worst = 0.0
    plot_rows = []
    for phi in _phi_battery(scn):
        lhs, _ = integrate_volume(phi, cylinders, q, m)
        rhs = sum(integrate_rays(phi, c, f, q) for c, f in zip(cylinders, fields))
        res = abs(lhs - rhs) / max(abs(lhs), 1e-12)
        plot_rows.append((phi.kind, lhs, rhs, res))
        worst = max(worst, res)
    tol = 1e-3 * tol_scale
    plots = {
        "disintegration_residuals": (
            ["phi", "lhs", "rhs", "rel_residual"], plot_rows,
        )
    }
    return "max_rel_residual", worst, tol, worst <= tol, plots


def check_pushforward(scn, q, grid, tol_scale):
    """Sandwich bounds on D(t)/D(s) from the comparison factors, plus the
    constant-curvature equality case anchored at the apex offset."""
    _require_band(scn, "pushforward")
    m = scn.manifold
    _, cylinders = materialize(scn)
    cyl = cylinders[0]
    y = cyl.base[0]
    rng = np.random.default_rng(q.seed)
    margin = 1e-3 * (cyl.h_plus - cyl.h_minus)
    h_apex = cyl.ray_window[0]  # lower ray endpoint offset (the pole)
    worst = -np.inf
    for _ in range(50):
        s, t = np.sort(rng.uniform(cyl.h_minus + margin, cyl.h_plus - margin, 2))
        Ds = jacobian_flow_numeric(cyl, y, s)
        Dt = jacobian_flow_numeric(cyl, y, t)
        lower, upper = pushforward_factors(s, t, cyl.h_minus, cyl.h_plus, m)
        worst = max(worst, (lower * Ds - Dt) / Ds, (Dt - upper * Ds) / Ds)
        eq = (s_K(t - h_apex, m.K) / s_K(s - h_apex, m.K)) ** (m.n - 1)
        worst = max(worst, abs(Dt / Ds - eq))
    tol = 1e-6 * tol_scale
    return "max_violation", worst, tol, worst <= tol, {}


def check_jacobian(scn, q, grid, tol_scale):
    """Numeric slice Jacobian of the toward-apex flow vs the closed-form
    contraction factor on tilted slices."""
    m = scn.manifold
    if scn.kind == "tilted-disk":
        p = scn.params
        _, (cyl,) = materialize(scn)
        cases = [(float(p["theta"]), float(p["r"]), 0.5 * cyl.h_plus, cyl)]
    else:
        rk = np.sqrt(m.K)
        r, t = np.pi / (2.0 * rk), np.pi / (4.0 * rk)
        cases = [
            (theta, r, t, make_tilted_slice(m, theta, r, -r / 4.0, 0.9 * r))
            for theta in (0.0, np.pi / 6.0, np.pi / 3.0)
        ]
    worst = 0.0
    plot_rows = []
    for theta, r, t, cyl in cases:
        num = jacobian_flow_numeric(cyl, cyl.base[0], t)
        ref = jacobian_bound_formula(r, t, theta, m)
        worst = max(worst, abs(num - ref))
        plot_rows.append((theta, num, ref))
    tol = 1e-4 * tol_scale
    plots = {"jacobian_cases": (["theta", "numeric", "formula"], plot_rows)}
    return "max_abs_error", worst, tol, worst <= tol, plots


def check_continuity(scn, q, grid, tol_scale):
    """Continuity equation d_t D = (div d)_ac(Phi^t) D, normalized residual."""
    _require_band(scn, "continuity")
    u, cylinders = materialize(scn)
    cone = _cone_field(u)
    worst = 0.0
    plots = {}
    for k, cyl in enumerate(cylinders):
        f = density_D(cyl, grid)
        worst = max(worst, continuity_residual(f, cyl, cone))
        if k == 0:
            oracle = cyl.oracle_density
            plots["density_profile"] = (
                ["t", "D_numeric", "D_oracle"],
                [
                    (float(t), float(v), float(oracle(t)) if oracle else float("nan"))
                    for t, v in zip(f.t_grid, f.values[0])
                ],
            )
    tol = 5e-3 * tol_scale
    return "max_norm_residual", worst, tol, worst <= tol, plots


def check_green_gauss(scn, q, grid, tol_scale):
    """Green-Gauss identity on a single-cone cylinder: once with phi = 1
    (divergence theorem) and once with phi compactly supported inside
    (boundary term drops)."""
    _require_band(scn, "green-gauss")
    m = scn.manifold
    u, cylinders = materialize(scn)
    cyl = cylinders[0]
    cone = _cone_field(u)
    lo, hi = cyl.colat_range
    w = hi - lo
    phis = [
        TestFunction("constant", {"value": 1.0}),
        TestFunction("zonal-bump", {"axis": pole(m), "r_lo": lo + w / 5.0, "r_hi": hi - w / 5.0}),
    ]
    n_side = min(65, grid) | 1
    worst = max(green_gauss_residual(cyl, phi, cone, q, n_side=n_side) for phi in phis)
    tol = 5e-3 * tol_scale
    return "max_abs_residual", worst, tol, worst <= tol, {}


def check_duality(scn, q, grid, tol_scale):
    """Strong duality on random small instances: dual LP value vs the
    independent primal coupling optimum."""
    m = scn.manifold if scn.manifold.K > 1e-6 else ManifoldParams(scn.manifold.n, 1.0)
    rng = np.random.default_rng(q.seed)
    worst = 0.0
    for _ in range(25):
        mu = _random_measure(rng, int(rng.integers(1, 7)), m)
        nu = _random_measure(rng, int(rng.integers(1, 7)), m)
        nu = DiscreteMeasure(nu.points, nu.masses * (mu.total / nu.total))
        _, w1 = solve_kantorovich_dual(mu, nu, m)
        worst = max(worst, abs(w1 - primal_transport_cost(mu, nu, m)))
    tol = 1e-8 * tol_scale
    return "max_duality_gap", worst, tol, worst <= tol, {}


def _random_measure(rng, k: int, m: ManifoldParams) -> DiscreteMeasure:
    pts = []
    while len(pts) < k:
        g = rng.standard_normal(m.n + 1)
        x = m.radius * g / np.linalg.norm(g)
        if all(np.linalg.norm(x - p) > 1e-3 * m.radius for p in pts):
            pts.append(x)
    return DiscreteMeasure(np.array(pts), rng.uniform(0.5, 1.5, k))


def check_cone_convergence(scn, q, grid, tol_scale):
    """Max-of-cones approximations u_I from nested anchor sets on the upper
    band circle converge uniformly to the radial potential from below."""
    m = scn.manifold
    p = scn.params
    if scn.kind in ("radial-band", "two-band"):
        r1 = float(p["r1"])
        r2 = float(p["r2"]) if scn.kind == "radial-band" else float(p["r3"])
    else:
        r1, r2 = m.diameter / 4.0, m.diameter / 2.0
    # evaluation grid: ~10^3 points covering the band; 31 longitudes are
    # coprime to every anchor count, so grid points interleave the anchors
    n_lon = 31
    colat = np.linspace(r1, r2, 32)
    lon = np.linspace(0.0, 2.0 * np.pi, n_lon, endpoint=False)
    X = np.array([point_at(m, c, lo) for c in colat for lo in lon])
    u_true = colat.repeat(n_lon) - m.diameter
    errors = []
    sizes = (4, 16, 64, 256)
    for k in sizes:
        A = np.array([point_at(m, r2, 2.0 * np.pi * i / k) for i in range(k)])
        dists = np.arccos(np.clip(m.K * X @ A.T, -1.0, 1.0)) / np.sqrt(m.K)
        u_I = np.max((r2 - m.diameter) - dists, axis=1)
        errors.append(float(np.max(u_true - u_I)))
    tol = 0.02 * tol_scale
    monotone = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    value = errors[-1]
    plots = {
        "cone_convergence": (["n_anchors", "sup_error"], list(zip(sizes, errors)))
    }
    return "sup_error_at_256", value, tol, monotone and value <= tol, plots


def check_lipschitz_t(scn, q, grid, tol_scale):
    """Measured |dD/dt| against the cotangent modulus bound on random
    cylinders of the scenario's radial field."""
    _require_band(scn, "lipschitz-t")
    m = scn.manifold
    u, _ = materialize(scn)
    rng = np.random.default_rng(q.seed)
    worst = 0.0
    for _ in range(10):
        cyl = _random_radial_cylinder(rng, u, m)
        f = density_D(cyl, 65)
        bound = lipschitz_bound_t(f, 0)
        worst = max(worst, lipschitz_modulus_t(f, 0) / bound)
    tol = 1.1 * tol_scale
    return "max_modulus_ratio", worst, tol, worst <= tol, {}


def _random_radial_cylinder(rng, u, m: ManifoldParams) -> CylinderSet:
    margin = 0.15 * m.diameter
    r_c = rng.uniform(margin, m.diameter - margin)
    a = rng.uniform(0.1, 0.8) * (r_c - 0.5 * margin)
    b = rng.uniform(0.1, 0.8) * (m.diameter - r_c - 0.5 * margin)
    lons = rng.uniform(0.0, 2.0 * np.pi, 4)
    base = np.array([point_at(m, r_c, lo) for lo in lons])
    field = cone_direction_field(u)
    return CylinderSet(
        base=base,
        directions=np.array([field(y) for y in base]),
        h_minus=-a,
        h_plus=b,
        level=r_c - m.diameter,
        manifold=m,
        potential=u,
        base_weights=np.full(4, 1.0),
        direction_field=field,
        axis=pole(m),
        ray_window=(-r_c, m.diameter - r_c),
    )


def check_lower_bound(scn, q, grid, tol_scale):
    """Laplacian-comparison certificate for 1-, 3-, and 10-anchor fields:
    (div)_ac never drops below the nearest-anchor cotangent floor."""
    m = scn.manifold if scn.manifold.K > 1e-6 else ManifoldParams(scn.manifold.n, 1.0)
    rng = np.random.default_rng(q.seed)
    margin = 0.05 * m.radius  # chordal gap kept from anchors and antipodes
    worst = np.inf
    for k in (1, 3, 10):
        anchors = _random_measure(rng, k, m).points
        values = rng.uniform(0.0, 0.25 * m.diameter, k)
        cone = ConeField(anchors, values, m)
        samples = []
        while len(samples) < 10_000:
            g = rng.standard_normal((4096, m.n + 1))
            pts = m.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
            gaps = np.minimum(
                np.min(np.linalg.norm(pts[:, None, :] - anchors[None], axis=2), axis=1),
                np.min(np.linalg.norm(pts[:, None, :] + anchors[None], axis=2), axis=1),
            )
            samples.extend(pts[gaps > margin])
        worst = min(worst, lower_bound_certificate(cone, np.array(samples[:10_000]), m))
    tol = 1e-9 * tol_scale
    return "min_certificate", worst, tol, worst >= -tol, {}


REGISTRY = {
    "cone-convergence": check_cone_convergence,
    "continuity": check_continuity,
    "disintegration": check_disintegration,
    "duality": check_duality,
    "green-gauss": check_green_gauss,
    "jacobian": check_jacobian,
    "lipschitz-t": check_lipschitz_t,
    "lower-bound": check_lower_bound,
    "pushforward": check_pushforward,
}


def run_check(
    check_id: str, scn: Scenario, q: QuadratureSpec, grid: int = 129,
    tol_scale: float = 1.0,
) -> CheckResult:
    if check_id not in REGISTRY:
        raise UnknownCheckError(
            f"unknown check {check_id!r}; registered: {sorted(REGISTRY)}"
        )
    start = time.perf_counter()
    metric, value, tol, passed, plots = REGISTRY[check_id](scn, q, grid, tol_scale)
    wall_ms = int(round(1000.0 * (time.perf_counter() - start)))
    row = CheckRow(
        check=check_id, scenario=scn.name, metric=metric, value=float(value),
        tolerance=float(tol), passed=bool(passed), samples=q.samples, seed=q.seed,
        wall_ms=wall_ms,
    )
    return CheckResult(row, plots)
