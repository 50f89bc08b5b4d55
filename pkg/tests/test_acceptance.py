"""Acceptance suite: the nine headline guarantees of the library, each at
its stated tolerance, each printing a single pass/fail line."""

import time

import numpy as np
import pytest

from otray.checks import run_check
from otray.density import (
    density_D,
    jacobian_bound_formula,
    jacobian_flow_numeric,
    lipschitz_bound_t,
    lipschitz_modulus_t,
    pushforward_factors,
)
from otray.disintegration import QuadratureSpec, TestFunction, integrate_rays, integrate_volume
from otray.divergence import ConeField, continuity_residual, green_gauss_residual
from otray.manifold import ManifoldParams, s_K
from otray.measures import DiscreteMeasure, primal_transport_cost, solve_kantorovich_dual
from otray.scenarios import make_tilted_slice, materialize, point_at, pole

Q = QuadratureSpec(samples=100_000, seed=42)
M = ManifoldParams(2, 1.0)


def report(name, passed, detail):
    print(f"\n[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module")
def radial(radial_scenario):
    u, (cyl,) = materialize(radial_scenario)
    return radial_scenario, u, cyl


@pytest.fixture(scope="module")
def radial_field(radial):
    _, _, cyl = radial
    return density_D(cyl, grid=129)


def test_criterion_1_disintegration_identity(radial, radial_field):
    """Volume integrals over the pi/4..pi/2 band match the nested ray
    integrals for constant, cos-colatitude, and band-indicator test
    functions, within 1e-3 relative at 1e5 Monte-Carlo samples."""
    scn, _, cyl = radial
    start = time.perf_counter()
    r1, r2 = scn.params["r1"], scn.params["r2"]
    w = r2 - r1
    phis = [
        TestFunction("constant", {"value": 1.0}),
        TestFunction("zonal-polynomial", {"axis": pole(M), "coeffs": [0.0, 1.0]}),
        TestFunction("band-indicator", {"axis": pole(M), "r_lo": r1 + w / 4, "r_hi": r2 - w / 4}),
    ]
    worst = 0.0
    for phi in phis:
        lhs, _ = integrate_volume(phi, [cyl], Q, M)
        rhs = integrate_rays(phi, cyl, radial_field, Q)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    # phi = 1: both sides against the closed-form band area
    closed = 2.0 * np.pi * (np.cos(r1) - np.cos(r2))
    lhs1, err1 = integrate_volume(phis[0], [cyl], Q, M)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and abs(lhs1 - closed) <= max(3 * err1, 1e-3 * closed) and elapsed <= 30.0
    report(
        "criterion-1 disintegration identity",
        ok,
        f"max rel residual {worst:.2e} (tol 1e-3), closed-form gap "
        f"{abs(lhs1 - closed):.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_pushforward_sandwich(radial):
    """Comparison factors sandwich D(t)/D(s) on 50 random window pairs; the
    upper factor is exact when anchored at the apex offset."""
    _, _, cyl = radial
    y = cyl.base[0]
    rng = np.random.default_rng(42)
    h_apex = cyl.ray_window[0]
    worst_slack, worst_eq = -np.inf, 0.0
    for _ in range(50):
        s, t = np.sort(rng.uniform(cyl.h_minus + 1e-3, cyl.h_plus - 1e-3, 2))
        Ds, Dt = jacobian_flow_numeric(cyl, y, s), jacobian_flow_numeric(cyl, y, t)
        lower, upper = pushforward_factors(s, t, cyl.h_minus, cyl.h_plus, M)
        worst_slack = max(worst_slack, (lower * Ds - Dt) / Ds, (Dt - upper * Ds) / Ds)
        eq = s_K(t - h_apex, M.K) / s_K(s - h_apex, M.K)
        worst_eq = max(worst_eq, abs(Dt / Ds - eq))
    ok = worst_slack <= 1e-6 and worst_eq <= 1e-6
    report(
        "criterion-2 pushforward sandwich",
        ok,
        f"max slack violation {worst_slack:.2e} (tol 1e-6), "
        f"apex-anchored equality gap {worst_eq:.2e} (tol 1e-6)",
    )


def test_criterion_3_jacobian_formula():
    """Closed-form slice Jacobian matches the finite-difference Jacobian on
    tilted slices, and degenerates to the Euclidean cone ratio as K -> 0."""
    r, t = np.pi / 2.0, np.pi / 4.0
    worst = 0.0
    for theta in (0.0, np.pi / 6.0, np.pi / 3.0):
        cyl = make_tilted_slice(M, theta, r, -r / 4.0, 0.9 * r)
        num = jacobian_flow_numeric(cyl, cyl.base[0], t)
        worst = max(worst, abs(num - jacobian_bound_formula(r, t, theta, M)))
    flat = ManifoldParams(2, 1e-12)
    rel = abs(jacobian_bound_formula(1.0, 0.25, 0.0, flat) / ((1.0 - 0.25) / 1.0) - 1.0)
    ok = worst <= 1e-4 and rel <= 1e-6
    report(
        "criterion-3 jacobian formula",
        ok,
        f"max |numeric - formula| {worst:.2e} (tol 1e-4), flat-limit rel "
        f"error {rel:.2e} (tol 1e-6)",
    )


def test_criterion_4_continuity_equation(radial, radial_field):
    """d_t D = (div d)_ac(Phi^t) D at 129 nodes, with >= 3x residual
    reduction under grid doubling."""
    _, u, cyl = radial
    cone = ConeField(u.anchors, u.values, M)
    res129 = continuity_residual(radial_field, cyl, cone)
    res257 = continuity_residual(density_D(cyl, grid=257), cyl, cone)
    ok = res129 <= 5e-3 and res129 / res257 >= 3.0
    report(
        "criterion-4 continuity equation",
        ok,
        f"residual {res129:.2e} (tol 5e-3), doubling reduction x{res129 / res257:.1f} (>= 3)",
    )


def test_criterion_5_green_gauss(radial):
    """Green-Gauss identity on the single-cone band cylinder, with and
    without a boundary term."""
    _, u, cyl = radial
    cone = ConeField(u.anchors, u.values, M)
    lo, hi = cyl.colat_range
    w = hi - lo
    res_full = green_gauss_residual(cyl, TestFunction("constant", {"value": 1.0}), cone, Q, n_side=65)
    bump = TestFunction("zonal-bump", {"axis": pole(M), "r_lo": lo + w / 5, "r_hi": hi - w / 5})
    res_compact = green_gauss_residual(cyl, bump, cone, Q, n_side=65)
    ok = res_full <= 5e-3 and res_compact <= 5e-3
    report(
        "criterion-5 green-gauss formula",
        ok,
        f"phi=1 residual {res_full:.2e}, compact-support residual "
        f"{res_compact:.2e} (tol 5e-3 each)",
    )


def test_criterion_6_duality():
    """Dual LP optimum equals the primal coupling optimum on 25 random
    instances with <= 6 atoms per side, within 1e-8, in under 5 s."""
    rng = np.random.default_rng(42)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(25):
        def measure(k):
            pts = []
            while len(pts) < k:
                g = rng.standard_normal(3)
                x = g / np.linalg.norm(g)
                if all(np.linalg.norm(x - p) > 1e-3 for p in pts):
                    pts.append(x)
            return DiscreteMeasure(np.array(pts), rng.uniform(0.5, 1.5, k))

        mu = measure(int(rng.integers(1, 7)))
        nu = measure(int(rng.integers(1, 7)))
        nu = DiscreteMeasure(nu.points, nu.masses * mu.total / nu.total)
        _, w1 = solve_kantorovich_dual(mu, nu, M)
        worst = max(worst, abs(w1 - primal_transport_cost(mu, nu, M)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed <= 5.0
    report(
        "criterion-6 duality at desk scale",
        ok,
        f"max duality gap {worst:.2e} (tol 1e-8), {elapsed:.2f}s (<= 5s)",
    )


def test_criterion_7_cone_convergence(radial_scenario):
    """Nested max-of-cones approximations converge uniformly to the radial
    potential: non-increasing sup errors, below 0.02 at 256 anchors."""
    result = run_check("cone-convergence", radial_scenario, Q)
    (_, rows) = result.plots["cone_convergence"]
    errors = [e for _, e in rows]
    monotone = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    ok = monotone and errors[-1] <= 0.02
    report(
        "criterion-7 cone-approximation convergence",
        ok,
        f"sup errors {[f'{e:.3g}' for e in errors]} (non-increasing, last <= 0.02)",
    )


def test_criterion_8_laplacian_comparison(radial_scenario):
    """(div)_ac stays above the nearest-anchor cotangent floor on 1e4
    samples for 1-, 3-, and 10-anchor fields."""
    result = run_check("lower-bound", radial_scenario, Q)
    r = result.row
    report(
        "criterion-8 laplacian-comparison certificate",
        r.passed,
        f"min certificate {r.value:.2e} (>= -1e-9)",
    )


def test_criterion_9_lipschitz_in_t(radial_scenario):
    """Measured |dD/dt| never exceeds the cotangent modulus bound x1.1 on
    10 random cylinders."""
    result = run_check("lipschitz-t", radial_scenario, Q)
    r = result.row
    report(
        "criterion-9 lipschitz-in-t modulus",
        r.passed and r.value <= 1.1,
        f"max measured/bound ratio {r.value:.3f} (<= 1.1)",
    )
