import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peripump.errors import InvalidGeometry, NonphysicalGeometry, OverlapWarning
from peripump.geometry import (MotorSpeed, average_flow, nominal_flow, nominal_volume_per_rotation,
                               reference_geometry, volume_per_rotation)
from peripump.units import ML, MM

# pi * (5 mm)^2 * 2 pi * (63 mm - 7 mm), evaluated by hand: 2.763489e-5 m^3
NOMINAL_VOLUME = 2 * math.pi**2 * 25e-6 * 0.056


class TestMotorSpeed:
    def test_rpm_roundtrip(self):
        assert MotorSpeed(2 * math.pi).rpm == pytest.approx(60.0, rel=1e-15)
        assert MotorSpeed.from_rpm(60).omega == pytest.approx(2 * math.pi, rel=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            MotorSpeed(-1.0)


class TestGeometryValidation:
    def test_reference_valid(self):
        g = reference_geometry()
        assert g.roller_count == 3
        assert g.separation_angle_deg == pytest.approx(180 - 50.53 - 60)

    @pytest.mark.parametrize("changes", [
        {"inner_tube_radius": 8 * MM},
        {"backplate_radius": 6 * MM},
        {"roller_count": 1},
        {"contact_angle_deg": 90.0},
        {"engagement_angle_deg": 0.0},
        {"engagement_angle_deg": 180.5},
        {"max_roller_volume": -1e-6},
        {"roller_offset_radius": 70 * MM},
    ])
    def test_invalid(self, changes):
        with pytest.raises(InvalidGeometry):
            reference_geometry().replace(**changes)

    def test_overlap_warns(self):
        with pytest.warns(OverlapWarning):
            reference_geometry().replace(contact_angle_deg=70.0)

    def test_no_warning_for_reference(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            reference_geometry()


class TestNominalFlow:
    def test_zero_speed(self, geom3):
        assert nominal_flow(geom3, MotorSpeed(0.0)) == 0.0

    def test_reference_60rpm(self, geom3):
        q = nominal_flow(geom3, MotorSpeed.from_rpm(60))
        assert q == pytest.approx(NOMINAL_VOLUME, rel=1e-12)
        assert q / ML == pytest.approx(27.636, rel=1e-4)

    def test_linear_in_speed(self, geom3):
        q60 = nominal_flow(geom3, MotorSpeed.from_rpm(60))
        assert nominal_flow(geom3, MotorSpeed.from_rpm(120)) == pytest.approx(2 * q60, rel=1e-15)


class TestVolumes:
    def test_nominal_volume(self, geom3):
        assert nominal_volume_per_rotation(geom3) / ML == pytest.approx(27.636, rel=1e-4)

    def test_degenerate_raceway(self, geom3):
        g = geom3.replace(backplate_radius=geom3.outer_tube_radius, roller_offset_radius=0.0)
        assert nominal_volume_per_rotation(g) == 0.0

    def test_quadratic_in_inner_radius(self):
        g = reference_geometry().replace(outer_tube_radius=12 * MM)
        g2 = g.replace(inner_tube_radius=10 * MM)
        assert nominal_volume_per_rotation(g2) == pytest.approx(4 * nominal_volume_per_rotation(g), rel=1e-14)

    @pytest.mark.parametrize("nu, expected_ml", [(3, 27.636 - 3 * 2.06), (2, 27.636 - 2 * 2.06)])
    def test_volume_per_rotation(self, nu, expected_ml):
        v = volume_per_rotation(reference_geometry(nu))
        assert v == pytest.approx(NOMINAL_VOLUME - nu * 2.06 * ML, rel=1e-12)
        assert v / ML == pytest.approx(expected_ml, abs=2e-3)

    def test_no_roller_loss(self, geom3):
        g = geom3.replace(max_roller_volume=0.0)
        assert volume_per_rotation(g) == nominal_volume_per_rotation(g)

    def test_nonphysical(self, geom3):
        with pytest.raises(NonphysicalGeometry):
            volume_per_rotation(geom3.replace(max_roller_volume=10 * ML))
        with pytest.raises(NonphysicalGeometry):
            average_flow(geom3.replace(max_roller_volume=10 * ML), MotorSpeed(1.0))

    def test_average_flow(self, geom3):
        assert average_flow(geom3, MotorSpeed.from_rpm(60)) / ML == pytest.approx(21.456, rel=1e-4)
        assert average_flow(geom3, MotorSpeed(0.0)) == 0.0

    def test_ten_rotations_vs_measured(self, geom3):
        # measured three-roller average over 10 rotations: 212.53 mL
        v10 = 10 * volume_per_rotation(geom3) / ML
        assert v10 == pytest.approx(214.56, rel=1e-4)
        assert abs(v10 - 212.53) / 212.53 < 0.0237


geometries = st.builds(
    lambda r_i, wall, gap, beta, nu, vr_frac: reference_geometry(nu).replace(
        inner_tube_radius=r_i, outer_tube_radius=r_i + wall,
        backplate_radius=r_i + wall + gap, roller_offset_radius=0.0,
        contact_angle_deg=beta, max_roller_volume=vr_frac * 2 * math.pi * gap * math.pi * r_i**2 / nu),
    r_i=st.floats(1e-3, 2e-2), wall=st.floats(1e-4, 5e-3), gap=st.floats(1e-2, 0.2),
    beta=st.floats(0, 60), nu=st.integers(2, 8), vr_frac=st.floats(0, 0.9))


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(g=geometries, omega=st.floats(1e-3, 100))
    def test_flow_volume_identity(self, g, omega):
        lhs = nominal_flow(g, MotorSpeed(omega)) * (2 * math.pi / omega)
        assert lhs == pytest.approx(nominal_volume_per_rotation(g), rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(g=geometries.filter(lambda g: g.roller_count < 8))
    def test_roller_step_is_vr(self, g):
        try:
            v_next = volume_per_rotation(g.replace(roller_count=g.roller_count + 1))
        except NonphysicalGeometry:
            return
        assert volume_per_rotation(g) - v_next == pytest.approx(g.max_roller_volume, rel=1e-9, abs=1e-18)

    @settings(max_examples=100, deadline=None)
    @given(g=geometries, omega=st.floats(1e-3, 100))
    def test_average_flow_linear_and_monotone(self, g, omega):
        q1 = average_flow(g, MotorSpeed(omega))
        assert average_flow(g, MotorSpeed(2 * omega)) == pytest.approx(2 * q1, rel=1e-12)
        bigger_vr = g.replace(max_roller_volume=g.max_roller_volume * 1.05)
        try:
            assert average_flow(bigger_vr, MotorSpeed(omega)) <= q1
        except NonphysicalGeometry:
            pass
