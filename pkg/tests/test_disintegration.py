import numpy as np
import pytest

from otray.density import density_D
from otray.disintegration import (
    QuadratureSpec,
    TestFunction,
    additivity_check,
    cylinder_contains,
    disintegration_residual,
    integrate_rays,
    integrate_volume,
    merge_cylinders,
)
from otray.errors import FieldMismatchError, OverlapError
from otray.manifold import ManifoldParams
from otray.scenarios import materialize, point_at, pole

M = ManifoldParams(2, 1.0)
R1, R2 = np.pi / 4.0, np.pi / 2.0
BAND_AREA = 2.0 * np.pi * (np.cos(R1) - np.cos(R2))  # zonal band on the unit sphere


class TestTestFunction:
    def test_constant(self):
        phi = TestFunction("constant", {"value": 2.5})
        assert phi(point_at(M, 1.0, 0.3), M) == 2.5

    def test_zonal_polynomial_is_cos_colat(self):
        phi = TestFunction("zonal-polynomial", {"axis": pole(M), "coeffs": [0.0, 1.0]})
        assert phi(point_at(M, 1.1, 2.0), M) == pytest.approx(np.cos(1.1))

    def test_band_indicator_with_half_edges(self):
        phi = TestFunction("band-indicator", {"axis": pole(M), "r_lo": 0.5, "r_hi": 1.0})
        assert phi(point_at(M, 0.7, 0.0), M) == 1.0
        assert phi(point_at(M, 1.2, 0.0), M) == 0.0
        assert phi(point_at(M, 0.5, 0.0), M) == 0.5
        assert phi(point_at(M, 1.0, 0.0), M) == 0.5

    def test_zonal_bump_compact_support(self):
        phi = TestFunction("zonal-bump", {"axis": pole(M), "r_lo": 0.5, "r_hi": 1.0})
        assert phi(point_at(M, 0.75, 0.0), M) == pytest.approx(1.0)
        assert phi(point_at(M, 0.5, 0.0), M) == 0.0
        assert phi(point_at(M, 1.3, 0.0), M) == 0.0

    def test_product_chart_longitude_dependence(self):
        phi = TestFunction(
            "product-chart",
            {"axis": pole(M), "coeffs": [1.0], "m_lon": 2, "phase": 0.0},
        )
        vals = [phi(point_at(M, 1.0, lo), M) for lo in (0.0, np.pi / 4.0)]
        assert vals[0] != pytest.approx(vals[1])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            TestFunction("mystery", {}).evaluate(np.atleast_2d(pole(M)), M)


class TestQuadratureSpec:
    def test_defaults(self):
        q = QuadratureSpec()
        assert (q.method, q.samples, q.seed) == ("monte-carlo", 100_000, 42)

    def test_rejects_bad_method_and_samples(self):
        with pytest.raises(ValueError):
            QuadratureSpec(method="midpoint")
        with pytest.raises(ValueError):
            QuadratureSpec(samples=0)


class TestVolumeIntegral:
    def test_product_grid_band_area(self, radial_setup):
        _, _, cyl = radial_setup
        q = QuadratureSpec(method="product-grid", samples=10_000)
        val, err = integrate_volume(TestFunction("constant", {"value": 1.0}), cyl, q, M)
        assert err == 0.0
        assert val == pytest.approx(BAND_AREA, rel=1e-9)

    def test_monte_carlo_band_area(self, radial_setup):
        _, _, cyl = radial_setup
        q = QuadratureSpec(samples=50_000, seed=4)
        val, err = integrate_volume(TestFunction("constant", {"value": 1.0}), cyl, q, M)
        assert err > 0.0
        assert abs(val - BAND_AREA) <= max(3.0 * err, 1e-3 * BAND_AREA)

    def test_monte_carlo_deterministic_in_seed(self, radial_setup):
        _, _, cyl = radial_setup
        phi = TestFunction("constant", {"value": 1.0})
        q = QuadratureSpec(samples=5_000, seed=11)
        assert integrate_volume(phi, cyl, q, M) == integrate_volume(phi, cyl, q, M)

    def test_membership_fallback(self, radial_setup):
        _, _, cyl = radial_setup
        assert cylinder_contains(cyl, point_at(M, 1.0, 0.4))
        assert not cylinder_contains(cyl, point_at(M, 0.2, 0.4))


class TestRayIntegral:
    def test_constant_phi_closed_form(self, radial_setup):
        """Sum of fiber integrals of D recovers the band area exactly."""
        _, _, cyl = radial_setup
        f = density_D(cyl, grid=65)
        rhs = integrate_rays(TestFunction("constant", {"value": 1.0}), cyl, f, QuadratureSpec())
        assert rhs == pytest.approx(BAND_AREA, rel=1e-7)

    def test_field_mismatch_guard(self, radial_setup, two_band_scenario):
        _, _, cyl = radial_setup
        _, (other, _) = materialize(two_band_scenario)
        f = density_D(other, grid=17)
        with pytest.raises(FieldMismatchError):
            integrate_rays(TestFunction("constant", {"value": 1.0}), cyl, f, QuadratureSpec())


class TestResidual:
    def test_constant_phi_residual(self, radial_scenario):
        rep = disintegration_residual(
            TestFunction("constant", {"value": 1.0}),
            radial_scenario,
            QuadratureSpec(samples=50_000),
            grid=65,
        )
        assert rep.residual <= max(3.0 * rep.lhs_stderr / abs(rep.lhs), 1e-3)
        assert rep.lhs == pytest.approx(BAND_AREA, rel=5e-3)

    def test_report_fields(self, radial_scenario):
        rep = disintegration_residual(
            TestFunction("constant", {"value": 1.0}),
            radial_scenario,
            QuadratureSpec(samples=2_000, seed=7),
            grid=17,
        )
        assert rep.scenario == radial_scenario.name
        assert rep.phi_kind == "constant"
        assert (rep.samples, rep.seed) == (2_000, 7)


class TestAdditivity:
    def test_merge_and_additivity(self, two_band_scenario):
        _, cylinders = materialize(two_band_scenario)
        union = merge_cylinders(cylinders)
        assert union.h_plus - union.h_minus == pytest.approx(
            sum(c.h_plus - c.h_minus for c in cylinders)
        )
        phis = [
            TestFunction("constant", {"value": 1.0}),
            TestFunction("zonal-polynomial", {"axis": pole(M), "coeffs": [0.0, 1.0]}),
        ]
        gap = additivity_check(phis, cylinders, QuadratureSpec(), grid=65)
        assert gap <= 1e-6

    def test_overlap_rejected(self, radial_setup):
        _, _, cyl = radial_setup
        with pytest.raises(OverlapError):
            additivity_check([], [cyl, cyl], QuadratureSpec(), grid=17)

    def test_non_contiguous_rejected(self, radial_setup, two_band_scenario):
        _, cylinders = materialize(two_band_scenario)
        with pytest.raises(ValueError):
            merge_cylinders([cylinders[0], cylinders[0]])
