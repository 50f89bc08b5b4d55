import numpy as np
import pytest

from otray.errors import (
    AmbiguousDirectionError,
    EmptyPartitionError,
    InsufficientRayLengthError,
    OutOfWindowError,
    WindowOrderError,
)
from otray.manifold import ManifoldParams, distance, exp_map, log_map
from otray.measures import Potential, dirac, solve_kantorovich_dual
from otray.rays import (
    RayTraceConfig,
    RegionSpec,
    alpha_beta,
    build_cylinder,
    build_sheaf_partition,
    cone_direction_field,
    flow,
    ray_through,
)
from otray.scenarios import materialize, point_at, pole

M = ManifoldParams(2, 1.0)


def radial_potential():
    return Potential(np.atleast_2d(-pole(M)), np.zeros(1), M)


class TestRayThrough:
    def test_meridian_oracle(self):
        """On the radial field the ray through any band point is its meridian."""
        u = radial_potential()
        z = point_at(M, 1.0, 0.7)
        ray = ray_through(z, u)
        assert ray.t_lower == pytest.approx(-1.0, abs=1e-6)
        assert ray.t_upper == pytest.approx(np.pi - 1.0, abs=1e-6)
        for t in (-0.5, 0.3, 1.2):
            assert np.linalg.norm(ray.point_at(t) - point_at(M, 1.0 + t, 0.7)) < 1e-12

    def test_unit_slope(self):
        u = radial_potential()
        ray = ray_through(point_at(M, 0.8, 0.2), u)
        for t in (-0.3, 0.0, 0.9):
            assert u(ray.point_at(t)) == pytest.approx(ray.u_base + t, abs=1e-9)

    def test_ambiguous_on_tie_set(self):
        a1, a2 = point_at(M, 1.0, 0.0), point_at(M, 1.0, np.pi)
        u = Potential(np.array([a1, a2]), np.zeros(2), M)
        with pytest.raises(AmbiguousDirectionError):
            ray_through(point_at(M, 0.0, 0.0), u)

    def test_ambiguous_at_apex(self):
        u = radial_potential()
        with pytest.raises(AmbiguousDirectionError):
            ray_through(-pole(M), u)


class TestEndpointFunctionals:
    def test_two_point_midpoint(self):
        p, q = point_at(M, 0.4, 0.0), point_at(M, 1.4, 0.0)
        u, _ = solve_kantorovich_dual(dirac(p), dirac(q), M)
        d = distance(p, q, M)
        mid = exp_map(q, 0.5 * log_map(q, p, M).vec, M)
        alpha, beta = alpha_beta(mid, u, [p], [q])
        assert alpha == pytest.approx(d / 2.0, abs=1e-9)
        assert beta == pytest.approx(d / 2.0, abs=1e-9)

    def test_empty_supremum_is_minus_inf(self):
        p, q = point_at(M, 0.4, 0.0), point_at(M, 1.4, 0.0)
        u, _ = solve_kantorovich_dual(dirac(p), dirac(q), M)
        off_ray = point_at(M, 0.9, 2.0)
        alpha, beta = alpha_beta(off_ray, u, [p], [q])
        assert alpha == -np.inf


def band_samples(n=60, seed=0):
    rng = np.random.default_rng(seed)
    colat = rng.uniform(np.pi / 4.0, np.pi / 2.0, n)
    lon = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.array([point_at(M, c, lo) for c, lo in zip(colat, lon)])


class TestSheafPartition:
    def test_one_sheaf_per_dyadic_window(self):
        u = radial_potential()
        pts = band_samples()
        sheaves = build_sheaf_partition(u, RegionSpec(pts), k=3, j=8)
        width = 2.0**-3
        hit = sorted({int(np.floor(u(x) / width)) for x in pts})
        assert len(sheaves) == len(hit)
        for s, idx in zip(sheaves, hit):
            assert s.level == pytest.approx((idx + 0.5) * width)
            assert s.u_window[0] <= s.level <= s.u_window[1]

    def test_bases_sit_on_their_level(self):
        u = radial_potential()
        sheaves = build_sheaf_partition(u, RegionSpec(band_samples()), k=3, j=8)
        for s in sheaves:
            for b in s.base_points:
                assert u(b) == pytest.approx(s.level, abs=1e-7)

    def test_margin_excludes_short_rays(self):
        """Samples whose rays clear an endpoint by < 1/j are dropped; if all
        are dropped the partition is empty."""
        u = radial_potential()
        rng = np.random.default_rng(3)
        near_pole = np.array(
            [point_at(M, c, lo) for c, lo in
             zip(rng.uniform(0.02, 0.05, 20), rng.uniform(0, 2 * np.pi, 20))]
        )
        with pytest.raises(EmptyPartitionError):
            build_sheaf_partition(u, RegionSpec(near_pole), k=3, j=10)
        # with a generous margin the same samples survive
        assert build_sheaf_partition(u, RegionSpec(near_pole), k=6, j=200)


class TestCylinder:
    def test_window_order_enforced(self):
        u = radial_potential()
        sheaves = build_sheaf_partition(u, RegionSpec(band_samples()), k=3, j=8)
        with pytest.raises(WindowOrderError):
            build_cylinder(sheaves[0], 0.1, 0.3, u)

    def test_insufficient_ray_length(self):
        u = radial_potential()
        sheaves = build_sheaf_partition(u, RegionSpec(band_samples()), k=3, j=8)
        with pytest.raises(InsufficientRayLengthError) as e:
            build_cylinder(sheaves[0], -0.1, M.diameter, u)
        assert e.value.offending_indices

    def test_flow_moves_by_arclength(self, radial_setup):
        _, u, cyl = radial_setup
        y = cyl.base[0]
        for t in (-0.3, 0.0, 0.35):
            x = flow(cyl, y, t)
            assert distance(y, x, M) == pytest.approx(abs(t), abs=1e-12)
            assert u(x) == pytest.approx(u(y) + t, abs=1e-12)

    def test_flow_window_guard(self, radial_setup):
        _, _, cyl = radial_setup
        with pytest.raises(OutOfWindowError):
            flow(cyl, cyl.base[0], cyl.h_plus + 0.1)

    def test_built_cylinder_flow_matches_ray(self):
        u = radial_potential()
        sheaves = build_sheaf_partition(u, RegionSpec(band_samples()), k=3, j=8)
        cyl = build_cylinder(sheaves[0], -0.05, 0.05, u)
        ray = sheaves[0].member_rays[0]
        assert np.linalg.norm(flow(cyl, ray.base, 0.04) - ray.point_at(0.04)) < 1e-9

    def test_direction_field_is_meridian(self, radial_setup):
        _, u, cyl = radial_setup
        f = cone_direction_field(u)
        x = point_at(M, 1.1, 0.9)
        d = f(x)
        assert np.linalg.norm(d) == pytest.approx(1.0)
        # step along d: colatitude increases at unit rate (toward the apex)
        step = exp_map(x, 0.01 * d, M)
        assert distance(step, pole(M), M) == pytest.approx(1.11, abs=1e-9)
