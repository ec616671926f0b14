"""Roller volume displacement: fitting V(theta) and turning it into flow pulses.

Angles are in degrees measured from first light contact between roller and
tube. Volumes are m^3. The fitted curve is a single degree-5 least-squares
polynomial so that its derivative is available in closed form.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InsufficientSamples, InvalidStep, NonMonotoneData
from .geometry import MotorSpeed
from .units import ML, deg_per_s

POLY_DEGREE = 5
MIN_SAMPLES = 7
# fitted V may dip by at most this fraction of V_max inside the support
MONOTONE_TOLERANCE = 0.05
_SUPPORT_GRID = 4001


@dataclass(frozen=True)
class DisplacementSample:
    angle_deg: float
    volume: float  # m^3

    def __post_init__(self):
        if not 0 <= self.angle_deg <= 360:
            raise ValueError(f"sample angle {self.angle_deg} outside [0, 360] deg")
        if not self.volume >= 0:
            raise ValueError(f"sample volume {self.volume} is negative")


@dataclass(frozen=True, eq=False)
class RollerDisplacementCurve:
    samples: tuple          # averaged DisplacementSample per angle
    poly_coeffs: np.ndarray  # ascending powers of theta [deg]; V in m^3
    support: tuple           # (theta_start, theta_end) [deg]
    v_max: float             # V(theta_end) - V(theta_start) [m^3]

    @property
    def width_deg(self) -> float:
        return self.support[1] - self.support[0]

    def volume(self, theta_deg):
        return np.polynomial.polynomial.polyval(theta_deg, self.poly_coeffs)

    def slope(self, theta_deg):
        """dV/dtheta in m^3 per degree."""
        return np.polynomial.polynomial.polyval(
            theta_deg, np.polynomial.polynomial.polyder(self.poly_coeffs))

    def pulse_duration(self, speed: MotorSpeed) -> float:
        return self.width_deg / deg_per_s(speed.omega)


def average_runs(samples) -> list[DisplacementSample]:
    """Collapse repeated runs to one mean volume per angle, sorted by angle."""
    groups: dict[float, list[float]] = {}
    for s in samples:
        groups.setdefault(float(s.angle_deg), []).append(float(s.volume))
    return [DisplacementSample(a, math.fsum(v) / len(v)) for a, v in sorted(groups.items())]


def _lstsq_poly(angles, volumes, scale):
    # fit in theta/scale for conditioning, then map back to raw powers of theta
    vander = np.vander(angles / scale, POLY_DEGREE + 1, increasing=True)
    a, *_ = np.linalg.lstsq(vander, volumes, rcond=None)
    return a / scale ** np.arange(POLY_DEGREE + 1)


def fit_displacement(samples) -> RollerDisplacementCurve:
    """Least-squares degree-5 fit of the run-averaged displacement samples.

    The support runs from the lowest fitted volume up to the angle of the
    largest fitted volume within the measured span.
    """
    averaged = average_runs(samples)
    if len(averaged) < MIN_SAMPLES:
        raise InsufficientSamples(
            f"need at least {MIN_SAMPLES} distinct angles for a degree-{POLY_DEGREE} fit, "
            f"got {len(averaged)}")
    angles = np.array([s.angle_deg for s in averaged])
    volumes = np.array([s.volume for s in averaged])
    scale = max(abs(angles[-1]), 1.0)
    coeffs = _lstsq_poly(angles, volumes, scale)

    theta = np.linspace(angles[0], angles[-1], _SUPPORT_GRID)
    fitted = np.polynomial.polynomial.polyval(theta, coeffs)
    i_end = int(np.argmax(fitted))
    i_start = int(np.argmin(fitted[: i_end + 1]))
    v_max = float(fitted[i_end] - fitted[i_start])

    if v_max <= 1e-12 * max(volumes.max(), 1.0):
        # flat data: no displacement, keep the measured span as support
        return RollerDisplacementCurve(tuple(averaged), coeffs,
                                       (float(angles[0]), float(angles[-1])), 0.0)

    inside = fitted[i_start: i_end + 1]
    dip = float(np.max(np.maximum.accumulate(inside) - inside))
    if dip > MONOTONE_TOLERANCE * v_max:
        raise NonMonotoneData(
            f"fitted volume drops by {dip / v_max:.1%} of V_max inside the support")
    return RollerDisplacementCurve(tuple(averaged), coeffs,
                                   (float(theta[i_start]), float(theta[i_end])), v_max)


def read_displacement_csv(path) -> list[DisplacementSample]:
    """Read ``angle_deg,volume_ml[,run_id]`` rows; runs are averaged per angle."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"angle_deg", "volume_ml"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
        rows = [DisplacementSample(float(r["angle_deg"]), float(r["volume_ml"]) * ML)
                for r in reader]
    return average_runs(rows)


def reference_samples() -> list[DisplacementSample]:
    with resources.as_file(resources.files("peripump") / "data" / "reference_rvd.csv") as p:
        return read_displacement_csv(p)


def reference_curve() -> RollerDisplacementCurve:
    return fit_displacement(reference_samples())


def pulse_shape(curve: RollerDisplacementCurve, speed: MotorSpeed, h: float,
                disengaging: bool = False) -> np.ndarray:
    """Roller-induced flow magnitude sampled every ``h`` seconds [m^3/s].

    Engaging pulses walk the curve forward from the support start;
    disengaging pulses walk it backwards from full occlusion. Samples whose
    sign opposes the pulse direction are clamped to zero.
    """
    if not speed.omega > 0:
        raise ValueError("pulse shape needs a positive motor speed")
    if not h > 0:
        raise InvalidStep(f"time step must be positive, got {h}")
    rate = deg_per_s(speed.omega)
    duration = curve.width_deg / rate
    if h > duration / 10:
        raise InvalidStep(
            f"step {h:g} s is coarser than a tenth of the {duration:.4g} s pulse")
    n = int(math.floor(duration / h + 1e-9))
    travel = np.arange(n + 1) * h * rate
    theta = curve.support[1] - travel if disengaging else curve.support[0] + travel
    q = rate * curve.slope(theta)
    return np.maximum(q, 0.0)
