"""Unit conversions between the SI core and the mm / mL / kPa / r/min boundary."""

import math

MM = 1e-3
ML = 1e-6
KPA = 1e3

# compound units as they appear in the parameter tables
KPA_S_PER_ML = KPA / ML          # resistance -> Pa*s/m^3
ML_PER_KPA = ML / KPA            # compliance -> m^3/Pa
KPA_S2_PER_ML = KPA / ML         # inertance  -> Pa*s^2/m^3


def rpm_to_rad_s(rpm):
    return rpm * 2.0 * math.pi / 60.0


def rad_s_to_rpm(omega):
    return omega * 60.0 / (2.0 * math.pi)


def deg_per_s(omega):
    """Angular speed in degrees per second for ``omega`` in rad/s."""
    return omega * 180.0 / math.pi
