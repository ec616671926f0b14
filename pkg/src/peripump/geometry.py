"""Pump dimensions and the closed-form volumetric flow formulas.

All quantities are SI internally (m, m^3, rad/s). Angles stay in degrees
because every pump drawing and measurement is quoted that way.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

from .errors import InvalidGeometry, NonphysicalGeometry, OverlapWarning
from .units import ML, MM, rad_s_to_rpm, rpm_to_rad_s

# measured engagement span of the reference pump [deg]
REFERENCE_ENGAGEMENT_SPAN_DEG = 50.53


@dataclass(frozen=True)
class PumpGeometry:
    inner_tube_radius: float        # r_i [m]
    outer_tube_radius: float        # r_o [m]
    backplate_radius: float         # r_b [m]
    roller_radius: float            # [m], documentation only
    roller_offset_radius: float     # [m], documentation only
    contact_angle_deg: float        # beta
    roller_count: int               # NU
    max_roller_volume: float        # V_r [m^3]
    engagement_angle_deg: float     # phi

    def __post_init__(self):
        r_i, r_o, r_b = self.inner_tube_radius, self.outer_tube_radius, self.backplate_radius
        if not 0 < r_i < r_o:
            raise InvalidGeometry(f"need 0 < r_i < r_o, got r_i={r_i}, r_o={r_o}")
        # r_o == r_b is allowed as the degenerate zero-raceway case
        if r_b < r_o:
            raise InvalidGeometry(f"need r_o <= r_b, got r_o={r_o}, r_b={r_b}")
        if not 0 <= self.roller_offset_radius < r_b:
            raise InvalidGeometry("roller offset radius must lie inside the backplate")
        if self.roller_radius < 0:
            raise InvalidGeometry("roller radius must be non-negative")
        if int(self.roller_count) != self.roller_count or self.roller_count < 2:
            raise InvalidGeometry(f"roller_count must be an integer >= 2, got {self.roller_count}")
        if not 0 <= self.contact_angle_deg < 90:
            raise InvalidGeometry(f"contact angle must be in [0, 90) deg, got {self.contact_angle_deg}")
        if not 0 < self.engagement_angle_deg <= 180:
            raise InvalidGeometry(
                f"engagement angle must be in (0, 180] deg, got {self.engagement_angle_deg}")
        # V_r == 0 is the loss-free ideal pump
        if not self.max_roller_volume >= 0:
            raise InvalidGeometry("max roller volume must be non-negative")
        if self.separation_angle_deg < 0:
            warnings.warn(
                f"separation angle {self.separation_angle_deg:.3f} deg is negative; "
                "inlet and outlet pulses overlap", OverlapWarning, stacklevel=3)

    @property
    def separation_angle_deg(self) -> float:
        """Rotation between a disengagement start and the next engagement start."""
        return 180.0 - self.engagement_angle_deg - 2.0 * self.contact_angle_deg

    def replace(self, **changes) -> PumpGeometry:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class MotorSpeed:
    omega: float  # rad/s

    def __post_init__(self):
        if not (self.omega >= 0 and math.isfinite(self.omega)):
            raise ValueError(f"motor speed must be finite and >= 0, got {self.omega}")

    @classmethod
    def from_rpm(cls, rpm: float) -> MotorSpeed:
        return cls(rpm_to_rad_s(rpm))

    @property
    def rpm(self) -> float:
        return rad_s_to_rpm(self.omega)


def reference_geometry(roller_count: int = 3,
                       engagement_angle_deg: float = REFERENCE_ENGAGEMENT_SPAN_DEG) -> PumpGeometry:
    """The 3D-printed validation pump (two- or three-roller housing)."""
    return PumpGeometry(
        inner_tube_radius=5 * MM,
        outer_tube_radius=7 * MM,
        backplate_radius=63 * MM,
        roller_radius=20 * MM,
        roller_offset_radius=40 * MM,
        contact_angle_deg=30.0,
        roller_count=roller_count,
        max_roller_volume=2.06 * ML,
        engagement_angle_deg=engagement_angle_deg,
    )


def nominal_flow(geom: PumpGeometry, speed: MotorSpeed) -> float:
    """Ideal flow with the tube centreline swept at radius r_b - r_o [m^3/s]."""
    r_i = geom.inner_tube_radius
    return math.pi * r_i**2 * speed.omega * (geom.backplate_radius - geom.outer_tube_radius)


def nominal_volume_per_rotation(geom: PumpGeometry) -> float:
    r_i = geom.inner_tube_radius
    return 2.0 * math.pi * (geom.backplate_radius - geom.outer_tube_radius) * math.pi * r_i**2


def volume_per_rotation(geom: PumpGeometry) -> float:
    """Nominal volume less what each roller holds back while engaging.

    Raises NonphysicalGeometry when the rollers would swallow the whole
    nominal volume.
    """
    v_rot = nominal_volume_per_rotation(geom) - geom.max_roller_volume * geom.roller_count
    if v_rot <= 0:
        raise NonphysicalGeometry(
            f"volume per rotation {v_rot / ML:.4g} mL is not positive "
            f"({geom.roller_count} rollers x {geom.max_roller_volume / ML:.4g} mL)")
    return v_rot


def average_flow(geom: PumpGeometry, speed: MotorSpeed) -> float:
    return volume_per_rotation(geom) * speed.omega / (2.0 * math.pi)
