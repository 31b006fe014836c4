import math

import numpy as np
import pytest

from spinoptics import (
    MU_B_OVER_H_GHZ_PER_T,
    CODATA2018,
    FieldVector,
    GTensor,
    HyperfineModel,
    OpticalSystem,
    boltzmann_populations,
    effective_g,
    hyperfine_satellite_offsets,
    optical_transition_frequencies,
    rotation_about_axis,
    spin_temperature_from_ratio,
    zeeman_frequency,
)
from spinoptics.constants import H, K_B

ANISO = GTensor((7.45, 7.45, 10.76))
OPTICAL = OpticalSystem(
    g_ground=10.8, g_excited=12.9, f0_thz=195.0,
    gamma_inh_mhz=945.0, gamma_hom_mhz=10.9, t_optical_us=8.66,
)


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


class TestConstants:
    def test_mu_b_over_h_value(self):
        # 13.996244936 GHz/T to 9 significant digits
        assert abs(MU_B_OVER_H_GHZ_PER_T - 13.996244936) < 1e-8
        assert CODATA2018.mu_B_over_h == MU_B_OVER_H_GHZ_PER_T


class TestEffectiveG:
    def test_principal_axis(self):
        assert effective_g(ANISO, [0.0, 0.0, 1.0]) == pytest.approx(10.76, abs=1e-12)

    def test_isotropic(self):
        iso = GTensor((5.5, 5.5, 5.5))
        rng = np.random.default_rng(7)
        for _ in range(20):
            assert effective_g(iso, random_unit(rng)) == pytest.approx(5.5, rel=1e-12)

    def test_between_y_and_z(self):
        n = np.array([0.0, 1.0, 1.0]) / math.sqrt(2.0)
        expected = math.sqrt((7.45**2 + 10.76**2) / 2.0)  # closed form: 9.254190942486545
        assert effective_g(ANISO, n) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(9.254190942486545, rel=1e-12)

    def test_bounded_by_principal_values(self):
        rng = np.random.default_rng(11)
        g = GTensor((1.0, 7.45, 10.76))
        for _ in range(200):
            val = effective_g(g, random_unit(rng))
            assert 1.0 - 1e-12 <= val <= 10.76 + 1e-12

    def test_direction_negation_invariance(self):
        rng = np.random.default_rng(3)
        g = GTensor((1.0, 7.45, 10.76), rotation_about_axis([1, 2, 3], 40.0))
        for _ in range(50):
            n = random_unit(rng)
            assert effective_g(g, n) == pytest.approx(effective_g(g, -n), rel=1e-12)

    def test_simultaneous_rotation_invariance(self):
        rng = np.random.default_rng(5)
        g = GTensor((1.0, 7.45, 10.76))
        for _ in range(50):
            n = random_unit(rng)
            rot = rotation_about_axis(random_unit(rng), rng.uniform(0, 360))
            assert effective_g(g.rotated(rot), rot @ n) == pytest.approx(
                effective_g(g, n), rel=1e-12
            )

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValueError):
            effective_g(ANISO, [0.0, 0.0, 2.0])

    def test_negative_principal_rejected(self):
        with pytest.raises(ValueError):
            GTensor((-1.0, 7.45, 10.76))

    def test_improper_rotation_rejected(self):
        with pytest.raises(ValueError):
            GTensor((1.0, 2.0, 3.0), np.diag([1.0, 1.0, -1.0]))


class TestZeemanFrequency:
    def test_reference_values(self):
        assert zeeman_frequency(10.8, 0.200) == pytest.approx(30.231889061917045, rel=1e-12)
        assert zeeman_frequency(2.1, 0.024) == pytest.approx(0.7054107447780643, rel=1e-12)

    def test_zero_field(self):
        assert zeeman_frequency(5.0, 0.0) == 0.0

    def test_linearity(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            g = rng.uniform(0.1, 15.0)
            b1, b2 = rng.uniform(0.0, 1.0, 2)
            assert zeeman_frequency(g, b1 + b2) == pytest.approx(
                zeeman_frequency(g, b1) + zeeman_frequency(g, b2), rel=1e-12
            )

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            zeeman_frequency(-1.0, 0.1)
        with pytest.raises(ValueError):
            zeeman_frequency(1.0, -0.1)


class TestOpticalTransitions:
    def test_zero_field_degenerate(self):
        tf = optical_transition_frequencies(OPTICAL, 0.0)
        assert tf.a == tf.b == tf.c == tf.d == OPTICAL.f0_thz

    def test_separations_at_200mt(self):
        tf = optical_transition_frequencies(OPTICAL, 0.200)
        assert tf.ab_separation_ghz == pytest.approx(5.878422873150536, rel=1e-9)
        assert tf.cd_separation_ghz == pytest.approx(66.34220099698462, rel=1e-9)

    def test_cd_separation_slope(self):
        tf1 = optical_transition_frequencies(OPTICAL, 0.1)
        tf2 = optical_transition_frequencies(OPTICAL, 0.3)
        slope = (tf2.cd_separation_ghz - tf1.cd_separation_ghz) / 0.2
        assert slope == pytest.approx(331.7110049849231, rel=1e-9)

    def test_midpoints_equal_f0(self):
        for b in (0.01, 0.1, 0.2, 0.5):
            tf = optical_transition_frequencies(OPTICAL, b)
            assert (tf.a + tf.b) / 2.0 == pytest.approx(OPTICAL.f0_thz, rel=1e-14)
            assert (tf.c + tf.d) / 2.0 == pytest.approx(OPTICAL.f0_thz, rel=1e-14)

    def test_label_structure(self):
        tf = optical_transition_frequencies(OPTICAL, 0.2)
        # g_e > g_g: C highest, D lowest, A below B
        assert tf.d < tf.a < tf.b < tf.c


class TestBoltzmann:
    def test_degenerate_levels(self):
        assert boltzmann_populations(0.0, 1.0) == (0.5, 0.5)

    def test_reference_ratio(self):
        p_lo, p_up = boltzmann_populations(30.232, 0.600)
        assert p_up / p_lo == pytest.approx(0.08908372599972109, rel=1e-9)
        assert H * 30.232e9 / K_B == pytest.approx(1.4509071659400758, rel=1e-12)

    def test_high_temperature_limit(self):
        p_lo, p_up = boltzmann_populations(30.0, 1e6)
        assert abs(p_lo - 0.5) < 1e-6
        assert abs(p_up - 0.5) < 1e-6

    def test_sum_to_one(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            p_lo, p_up = boltzmann_populations(rng.uniform(0, 100), rng.uniform(0.01, 300))
            assert p_lo + p_up == pytest.approx(1.0, abs=1e-15)

    def test_nonpositive_temperature_rejected(self):
        with pytest.raises(ValueError):
            boltzmann_populations(1.0, 0.0)


class TestSpinTemperature:
    def test_inverse_of_reference(self):
        p_lo, p_up = boltzmann_populations(30.232, 0.600)
        assert spin_temperature_from_ratio(p_up / p_lo, 30.232) == pytest.approx(0.600, rel=1e-12)

    def test_equal_populations_unbounded(self):
        assert spin_temperature_from_ratio(1.0, 10.0) == math.inf

    def test_definition_point(self):
        s = 12.5
        expected = H * s * 1e9 / K_B
        assert spin_temperature_from_ratio(math.exp(-1.0), s) == pytest.approx(expected, rel=1e-12)

    def test_inversion_rejected(self):
        with pytest.raises(ValueError):
            spin_temperature_from_ratio(1.2, 10.0)

    def test_round_trip_identity(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            t = rng.uniform(0.05, 300.0)
            s = rng.uniform(0.01, 100.0)
            _, p_up = boltzmann_populations(s, t)
            ratio = p_up / (1.0 - p_up)
            assert spin_temperature_from_ratio(ratio, s) == pytest.approx(t, rel=1e-10)


class TestHyperfineSatellites:
    def test_er167_pattern(self):
        hf = HyperfineModel(a_iso_mhz=75.0, nuclear_spin=3.5, abundance=0.23)
        lines = hyperfine_satellite_offsets(hf)
        assert len(lines) == 9
        central = [w for d, w in lines if d == 0.0 and w > 0.1]
        assert central == [pytest.approx(0.77, abs=1e-12)]
        satellites = [(d, w) for d, w in lines if not (d == 0.0 and w > 0.1)]
        assert len(satellites) == 8
        for _, w in satellites:
            assert w == pytest.approx(0.02875, abs=1e-12)

    def test_zero_abundance(self):
        hf = HyperfineModel(a_iso_mhz=75.0, nuclear_spin=3.5, abundance=0.0)
        assert hyperfine_satellite_offsets(hf) == [(0.0, 1.0)]

    def test_two_line_case(self):
        hf = HyperfineModel(a_iso_mhz=100.0, nuclear_spin=0.5, abundance=1.0)
        lines = sorted(hyperfine_satellite_offsets(hf))
        assert lines == [
            (pytest.approx(-50.0), pytest.approx(0.5)),
            (pytest.approx(50.0), pytest.approx(0.5)),
        ]

    def test_weights_sum_and_symmetry(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            spin = rng.integers(0, 8) / 2.0
            hf = HyperfineModel(
                a_iso_mhz=rng.uniform(1.0, 500.0),
                nuclear_spin=spin,
                abundance=float(rng.uniform(0.0, 1.0)),
            )
            lines = hyperfine_satellite_offsets(hf)
            assert sum(w for _, w in lines) == pytest.approx(1.0, abs=1e-12)
            offsets = sorted(d for d, _ in lines)
            assert np.allclose(offsets, [-d for d in reversed(offsets)], atol=1e-9)

    def test_invalid_spin_rejected(self):
        with pytest.raises(ValueError):
            HyperfineModel(a_iso_mhz=1.0, nuclear_spin=0.3, abundance=0.5)


class TestFieldVector:
    def test_along_normalizes(self):
        f = FieldVector.along([0.0, 0.0, 5.0], 0.2)
        assert np.allclose(f.direction, [0.0, 0.0, 1.0])
        assert f.magnitude_t == 0.2

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError):
            FieldVector(0.1, np.array([0.0, 0.0, 1.5]))
