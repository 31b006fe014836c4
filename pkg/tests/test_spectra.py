import math

import numpy as np
import pytest
from scipy.signal import find_peaks

from oracles import lorentzian_coverage
from spinoptics import (
    MU_B_OVER_H_GHZ_PER_T,
    GTensor,
    HyperfineModel,
    LineshapeSpec,
    OpticalSystem,
    SitePair,
    Spectrum,
    angle_sweep_cd_splitting,
    edfs_spectrum,
    effective_g,
    fibonacci_sphere,
    lineshape_profile,
    ple_spectrum,
    powder_esr_spectrum,
    rotation_about_axis,
    uniform_grid,
)

OPTICAL = OpticalSystem(
    g_ground=10.8, g_excited=12.9, f0_thz=195.0,
    gamma_inh_mhz=945.0, gamma_hom_mhz=10.9, t_optical_us=8.66,
)
POWDER_G = GTensor((1.0, 7.45, 10.76))


class TestSpectrumValidation:
    def test_rejects_non_uniform_grid(self):
        with pytest.raises(ValueError):
            Spectrum("time_ns", np.array([0.0, 1.0, 3.0]), np.zeros(3))

    def test_rejects_decreasing_grid(self):
        with pytest.raises(ValueError):
            Spectrum("time_ns", np.array([0.0, 2.0, 1.0]), np.zeros(3))

    def test_rejects_nonfinite_intensity(self):
        with pytest.raises(ValueError):
            Spectrum("time_ns", np.array([0.0, 1.0, 2.0]), np.array([0.0, np.nan, 0.0]))

    def test_rejects_unknown_axis(self):
        with pytest.raises(ValueError):
            Spectrum("volts", np.array([0.0, 1.0]), np.zeros(2))


class TestLineshapes:
    def test_gaussian_unit_area(self):
        x = uniform_grid(-50.0, 50.0, 20001)
        y = lineshape_profile(x, 0.0, LineshapeSpec("gaussian", 2.0))
        assert np.trapezoid(y, x) == pytest.approx(1.0, abs=1e-9)

    def test_lorentzian_area_matches_analytic_coverage(self):
        w = 2.0
        for extent in (10.0, 100.0):
            x = uniform_grid(-extent * w, extent * w, 400001)
            y = lineshape_profile(x, 0.0, LineshapeSpec("lorentzian", w))
            assert np.trapezoid(y, x) == pytest.approx(lorentzian_coverage(extent), abs=1e-6)

    def test_pseudo_voigt_is_mix(self):
        x = uniform_grid(-10.0, 10.0, 2001)
        pv = lineshape_profile(x, 0.0, LineshapeSpec("pseudo_voigt", 1.5, mix=0.3))
        lor = lineshape_profile(x, 0.0, LineshapeSpec("lorentzian", 1.5))
        gau = lineshape_profile(x, 0.0, LineshapeSpec("gaussian", 1.5))
        assert np.allclose(pv, 0.3 * lor + 0.7 * gau)

    def test_fwhm_is_fwhm(self):
        for kind in ("gaussian", "lorentzian", "pseudo_voigt"):
            spec = LineshapeSpec(kind, 3.0)
            peak = lineshape_profile(np.array([0.0]), 0.0, spec)[0]
            half = lineshape_profile(np.array([1.5]), 0.0, spec)[0]
            assert half == pytest.approx(peak / 2.0, rel=1e-12)

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            LineshapeSpec("sinc", 1.0)
        with pytest.raises(ValueError):
            LineshapeSpec("gaussian", -1.0)
        with pytest.raises(ValueError):
            LineshapeSpec("pseudo_voigt", 1.0, mix=1.5)


class TestFibonacciSphere:
    def test_unit_vectors(self):
        nodes = fibonacci_sphere(512)
        assert nodes.shape == (512, 3)
        assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0, atol=1e-12)

    def test_near_uniform_moments(self):
        nodes = fibonacci_sphere(4096)
        # first and second moments of a uniform sphere
        assert np.allclose(nodes.mean(axis=0), 0.0, atol=1e-3)
        assert np.allclose((nodes**2).mean(axis=0), 1.0 / 3.0, atol=1e-3)


class TestPleSpectrum:
    LINE = LineshapeSpec("lorentzian", 0.945)

    def test_cold_traces_suppress_upper_level(self):
        grid = uniform_grid(194950.0, 195050.0, 2001)
        spec = ple_spectrum(OPTICAL, 0.200, 0.060, self.LINE, grid)
        w = spec.meta["weights"]
        upper = w["B"] + w["D"]
        lower = w["A"] + w["C"]
        assert upper < 0.01 * lower
        assert upper / lower == pytest.approx(3.1479097476587864e-11, rel=1e-6)

    def test_zero_field_single_peak_unit_weight(self):
        grid = uniform_grid(194950.0, 195050.0, 40001)
        spec = ple_spectrum(OPTICAL, 0.0, 4.0, LineshapeSpec("gaussian", 1.0), grid)
        assert grid[np.argmax(spec.intensity)] == pytest.approx(195000.0, abs=spec.step)
        assert np.trapezoid(spec.intensity, grid) == pytest.approx(1.0, abs=1e-6)

    def test_infinite_temperature_equal_weights(self):
        grid = uniform_grid(194950.0, 195050.0, 2001)
        spec = ple_spectrum(OPTICAL, 0.200, 1e9, self.LINE, grid)
        w = spec.meta["weights"]
        assert w["A"] == pytest.approx(w["B"], rel=1e-9)
        assert w["C"] == pytest.approx(w["D"], rel=1e-9)

    def test_integrated_intensity_independent_of_field_and_temperature(self):
        grid = uniform_grid(194950.0, 195050.0, 40001)
        line = LineshapeSpec("gaussian", 1.0)
        totals = [
            np.trapezoid(ple_spectrum(OPTICAL, b, t, line, grid).intensity, grid)
            for b, t in ((0.05, 0.6), (0.2, 0.6), (0.2, 300.0))
        ]
        assert max(totals) - min(totals) < 1e-6

    def test_truncation_reported_in_meta(self):
        narrow = uniform_grid(194999.0, 195001.0, 201)
        spec = ple_spectrum(OPTICAL, 0.200, 4.0, self.LINE, narrow)
        assert set(spec.meta["truncated_transitions"]) == {"C", "D"}

    def test_line_width_comes_from_inhomogeneous_width(self):
        grid = uniform_grid(194990.0, 195010.0, 4001)
        spec = ple_spectrum(OPTICAL, 0.0, 4.0, LineshapeSpec("lorentzian", 50.0), grid)
        peak = spec.intensity.max()
        above = grid[spec.intensity > peak / 2.0]
        fwhm_ghz = above[-1] - above[0]
        assert fwhm_ghz == pytest.approx(0.945, abs=2 * spec.step)


class TestPowderSpectrum:
    LINE = LineshapeSpec("lorentzian", 3.0)

    def test_turning_points_near_principal_fields(self):
        grid = uniform_grid(0.0, 800.0, 8001)
        spec = powder_esr_spectrum(POWDER_G, 9.5, self.LINE, grid, n_orientations=4096)
        b_max = grid[np.argmax(spec.intensity)]
        b_min = grid[np.argmin(spec.intensity)]
        assert abs(b_max - 63.08117872224996) < self.LINE.fwhm
        assert abs(b_min - 91.10785007401469) < self.LINE.fwhm

    def test_isotropic_single_feature(self):
        g = GTensor((5.0, 5.0, 5.0))
        b_res = 9.5 / (5.0 * MU_B_OVER_H_GHZ_PER_T) * 1e3
        grid = uniform_grid(b_res - 40.0, b_res + 40.0, 4001)
        spec = powder_esr_spectrum(g, 9.5, self.LINE, grid, n_orientations=1000)
        # derivative of a symmetric line: zero crossing at the center
        i_max = np.argmax(spec.intensity)
        i_min = np.argmin(spec.intensity)
        crossing = 0.5 * (grid[i_max] + grid[i_min])
        assert crossing == pytest.approx(b_res, abs=2 * spec.step)

    def test_quadrature_convergence(self):
        grid = uniform_grid(0.0, 800.0, 4001)
        a = powder_esr_spectrum(POWDER_G, 9.5, self.LINE, grid, n_orientations=4096)
        b = powder_esr_spectrum(POWDER_G, 9.5, self.LINE, grid, n_orientations=8192)
        ia = np.trapezoid(np.abs(a.intensity), grid)
        ib = np.trapezoid(np.abs(b.intensity), grid)
        assert abs(ib - ia) / ia < 1e-3

    def test_derivative_integrates_to_zero(self):
        grid = uniform_grid(0.0, 800.0, 8001)
        spec = powder_esr_spectrum(POWDER_G, 9.5, self.LINE, grid)
        total = np.trapezoid(spec.intensity, grid)
        scale = np.trapezoid(np.abs(spec.intensity), grid)
        assert abs(total) < 1e-3 * scale

    def test_zero_principal_value_rejected(self):
        with pytest.raises(ValueError):
            powder_esr_spectrum(GTensor((0.0, 7.45, 10.76)), 9.5, self.LINE, uniform_grid(0, 800, 801))

    def test_small_quadrature_rejected(self):
        with pytest.raises(ValueError):
            powder_esr_spectrum(POWDER_G, 9.5, self.LINE, uniform_grid(0, 800, 801), n_orientations=50)


class TestEdfsSpectrum:
    LINE = LineshapeSpec("lorentzian", 0.4)

    def test_spinless_single_peak(self):
        hf = HyperfineModel(0.0, 3.5, 0.0)
        g = GTensor((1.0, 7.45, 10.76))
        b0 = 9.7 / (10.76 * MU_B_OVER_H_GHZ_PER_T) * 1e3
        grid = uniform_grid(b0 - 20.0, b0 + 20.0, 4001)
        spec = edfs_spectrum(g, [0, 0, 1], 9.7, hf, self.LINE, grid)
        assert grid[np.argmax(spec.intensity)] == pytest.approx(b0, abs=spec.step)

    def test_satellite_count_and_spacing(self):
        hf = HyperfineModel(a_iso_mhz=150.0, nuclear_spin=3.5, abundance=0.23)
        g = GTensor((1.0, 7.45, 10.76))
        b0 = 9.7 / (10.76 * MU_B_OVER_H_GHZ_PER_T) * 1e3
        grid = uniform_grid(b0 - 20.0, b0 + 20.0, 16001)
        spec = edfs_spectrum(g, [0, 0, 1], 9.7, hf, self.LINE, grid)
        peaks, _ = find_peaks(spec.intensity, prominence=1e-4 * spec.intensity.max())
        assert peaks.size == 9
        spacings = np.diff(grid[peaks])
        expected = 150.0 / (10.76 * MU_B_OVER_H_GHZ_PER_T)
        assert np.allclose(spacings, expected, atol=3 * spec.step)

    def test_satellite_spacing_linear_in_coupling(self):
        g = GTensor((1.0, 7.45, 10.76))
        b0 = 9.7 / (10.76 * MU_B_OVER_H_GHZ_PER_T) * 1e3
        grid = uniform_grid(b0 - 40.0, b0 + 40.0, 32001)
        positions = {}
        for a_iso in (150.0, 300.0):
            hf = HyperfineModel(a_iso, 0.5, 1.0)
            spec = edfs_spectrum(g, [0, 0, 1], 9.7, hf, self.LINE, grid)
            peaks, _ = find_peaks(spec.intensity, prominence=0.1 * spec.intensity.max())
            positions[a_iso] = np.diff(grid[peaks])[0]
        assert positions[300.0] == pytest.approx(2.0 * positions[150.0], abs=3e-2)

    def test_global_rotation_invariance(self):
        hf = HyperfineModel(100.0, 3.5, 0.23)
        rot = rotation_about_axis([1, 1, 0], 55.0)
        g = GTensor((1.0, 7.45, 10.76), rotation_about_axis([0, 1, 0], 20.0))
        n = np.array([0.3, -0.4, 0.5])
        n /= np.linalg.norm(n)
        grid = uniform_grid(50.0, 200.0, 3001)
        a = edfs_spectrum(g, n, 9.7, hf, self.LINE, grid)
        b = edfs_spectrum(g.rotated(rot), rot @ n, 9.7, hf, self.LINE, grid)
        assert np.allclose(a.intensity, b.intensity, rtol=0.0, atol=1e-12 * a.intensity.max())


class TestAngleSweep:
    GROUND = (1.0, 7.45, 10.76)
    EXCITED = (1.2, 8.9, 12.9)

    @staticmethod
    def _pairs(relation):
        ground = SitePair.from_rotation(GTensor(TestAngleSweep.GROUND), relation)
        excited = SitePair.from_rotation(GTensor(TestAngleSweep.EXCITED), relation)
        return ground, excited

    def test_identity_relation_degenerate(self):
        ground, excited = self._pairs(np.eye(3))
        angles = uniform_grid(0.0, 360.0, 181)
        a, b = angle_sweep_cd_splitting(ground, excited, 0.024, angles)
        assert np.allclose(a.intensity, b.intensity, rtol=1e-12)

    def test_period_180_degrees(self):
        ground, excited = self._pairs(rotation_about_axis([1, 0, 0], 25.0))
        angles = uniform_grid(0.0, 360.0, 361)
        a, _ = angle_sweep_cd_splitting(ground, excited, 0.024, angles)
        half = 180
        assert np.allclose(a.intensity[: half + 1], a.intensity[half:], rtol=1e-9)

    def test_in_plane_relation_shifts_traces(self):
        # sites related by a rotation about the sweep axis appear as a shifted angle axis
        shift_deg = 40.0
        ground, excited = self._pairs(rotation_about_axis([0, 0, 1], shift_deg))
        angles = uniform_grid(0.0, 360.0, 361)
        a, b = angle_sweep_cd_splitting(ground, excited, 0.024, angles)
        shift_bins = int(round(shift_deg / a.step))
        assert np.allclose(
            np.roll(b.intensity[:-1], shift_bins), a.intensity[:-1], rtol=1e-9
        )

    def test_matches_direct_effective_g_evaluation(self):
        relation = rotation_about_axis([1, 0, 0], 30.0)
        ground, excited = self._pairs(relation)
        angles = uniform_grid(0.0, 360.0, 73)
        field_t = 0.024
        a, b = angle_sweep_cd_splitting(ground, excited, field_t, angles)
        k = MU_B_OVER_H_GHZ_PER_T * field_t
        for idx, theta in enumerate(np.radians(angles)):
            n = np.array([math.cos(theta), math.sin(theta), 0.0])
            expect_a = (effective_g(ground.site_a, n) + effective_g(excited.site_a, n)) * k
            expect_b = (effective_g(ground.site_b, n) + effective_g(excited.site_b, n)) * k
            assert a.intensity[idx] == pytest.approx(expect_a, rel=1e-12)
            assert b.intensity[idx] == pytest.approx(expect_b, rel=1e-12)

    def test_site_pair_requires_matching_principals(self):
        with pytest.raises(ValueError):
            SitePair(GTensor((1.0, 2.0, 3.0)), GTensor((1.0, 2.0, 3.1)), np.eye(3))
