"""Roller-induced flow trains for the pump inlet and outlet lines."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .displacement import RollerDisplacementCurve, pulse_shape
from .errors import GridTooCoarse, OverlapWarning
from .geometry import MotorSpeed, PumpGeometry
from .units import ML


@dataclass(frozen=True, eq=False)
class PulseTrain:
    h: float
    t_sim: float
    q_ed_in: np.ndarray   # engaging-roller flow magnitude, >= 0 [m^3/s]
    q_ed_out: np.ndarray  # disengaging-roller flow magnitude, >= 0 [m^3/s]
    T1: float
    T2: float
    T3: float
    inlet_starts: tuple = ()
    outlet_starts: tuple = ()

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.q_ed_in)) * self.h

    def __len__(self):
        return len(self.q_ed_in)


def pulse_period(geom: PumpGeometry, speed: MotorSpeed) -> float:
    """Time between successive pulses on one line: 2*pi / (NU * omega)."""
    if not speed.omega > 0:
        raise ValueError("pulse period needs a positive motor speed")
    return 2.0 * math.pi / (geom.roller_count * speed.omega)


def separation_period(geom: PumpGeometry, speed: MotorSpeed) -> float:
    """Delay from an outlet (disengaging) pulse start to the next inlet pulse start."""
    if not speed.omega > 0:
        raise ValueError("separation period needs a positive motor speed")
    angle = geom.separation_angle_deg
    if angle < 0:
        warnings.warn(f"separation angle {angle:.3f} deg < 0: pulses overlap",
                      OverlapWarning, stacklevel=2)
    return math.pi * angle / (180.0 * speed.omega)


def grid_length(t_sim: float, h: float) -> int:
    return int(math.ceil(t_sim / h - 1e-9)) + 1


def _insert(train, pulse, first_time, period, h):
    n = len(train)
    starts = []
    k = 0
    while True:
        i0 = int(round((first_time + k * period) / h))
        if i0 >= n - 1:
            break
        lo, hi = max(i0, 0), min(i0 + len(pulse), n)
        if hi > lo:
            train[lo:hi] += pulse[lo - i0: hi - i0]
            starts.append(i0)
        k += 1
    return tuple(starts)


def build_train(curve: RollerDisplacementCurve, geom: PumpGeometry, speed: MotorSpeed,
                h: float, t_sim: float) -> PulseTrain:
    """Place copies of the roller pulse on zero vectors for both pump lines.

    Outlet pulses start at 0, T2, 2*T2, ... (a roller begins disengaging at
    t = 0); inlet pulses start at T3, T3 + T1, ... Start times are rounded to
    the nearest grid index and pulses running past ``t_sim`` are truncated.
    """
    t1 = pulse_period(geom, speed)
    t3 = separation_period(geom, speed)
    if t_sim < 2 * t1 * (1 - 1e-9):
        raise ValueError(f"t_sim={t_sim:g} s is shorter than two pulse periods ({2 * t1:.4g} s)")
    duration = curve.pulse_duration(speed)
    if h > min(t1, duration) / 10:
        raise GridTooCoarse(
            f"h={h:g} s exceeds a tenth of min(T1={t1:.4g} s, pulse={duration:.4g} s)")

    n = grid_length(t_sim, h)
    q_in = np.zeros(n)
    q_out = np.zeros(n)
    engage = pulse_shape(curve, speed, h)
    disengage = pulse_shape(curve, speed, h, disengaging=True)
    outlet_starts = _insert(q_out, disengage, 0.0, t1, h)
    inlet_starts = _insert(q_in, engage, t3, t1, h)
    return PulseTrain(h, t_sim, q_in, q_out, t1, t1, t3, inlet_starts, outlet_starts)


def write_train_csv(train: PulseTrain, path) -> None:
    data = np.column_stack([train.times, train.q_ed_in / ML, train.q_ed_out / ML])
    np.savetxt(path, data, delimiter=",", fmt="%.9g",
               header="t_s,q_ed_in_ml_s,q_ed_out_ml_s", comments="")
