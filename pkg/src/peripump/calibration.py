"""Line-parameter identification from bench measurements.

Resistance comes from a steady-flow pressure-drop test, compliance from a
sealed-line injection test, and inertance from a grid search that matches
simulated port pressure to a measured 100 r/min trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import AlignedSeries, resample, rmse
from .displacement import RollerDisplacementCurve
from .errors import NoConvergence, ZeroFlow
from .geometry import MotorSpeed, PumpGeometry
from .network import NetworkParams, simulate
from .pulses import build_train
from .units import ML

# effective compliance is quoted per millilitre of line volume:
# C [mL/kPa] has the same number as 1/B_e [1/kPa]
COMPLIANCE_REFERENCE_VOLUME = 1.0 * ML

# ties in the inertance score are resolved toward the smaller candidate
_TIE_RTOL = 1e-9


def water_density(temp_c: float) -> float:
    """Density of air-free water [kg/m^3], Tanaka et al. (2001) fit, 0-40 C."""
    t = temp_c
    return 999.97495 * (1.0 - (t - 3.983035) ** 2 * (t + 301.797) / (522528.9 * (t + 69.34881)))


@dataclass(frozen=True)
class ResistanceTestRecord:
    delta_p: float         # Pa
    displaced_mass: float  # kg
    duration: float        # s
    water_density: float = 997.0  # kg/m^3

    def __post_init__(self):
        if not self.delta_p > 0:
            raise ValueError("pressure differential must be positive")
        if self.displaced_mass < 0:
            raise ValueError("displaced mass must be non-negative")
        if not self.duration > 0:
            raise ValueError("test duration must be positive")
        if not 950 <= self.water_density <= 1010:
            raise ValueError(f"water density {self.water_density} outside [950, 1010] kg/m^3")

    @property
    def flow(self) -> float:
        return self.displaced_mass / self.water_density / self.duration


@dataclass(frozen=True)
class ComplianceTestRecord:
    delta_p: float          # Pa
    injected_volume: float  # m^3
    total_volume: float     # m^3

    def __post_init__(self):
        if not self.delta_p > 0:
            raise ValueError("pressure rise must be positive")
        if not self.injected_volume > 0:
            raise ValueError("injected volume must be positive")
        if not self.total_volume > self.injected_volume:
            raise ValueError("total volume must exceed the injected volume")

    @property
    def bulk_modulus(self) -> float:
        return self.delta_p * self.total_volume / self.injected_volume


def resistance_from_test(rec: ResistanceTestRecord) -> float:
    """Pressure drop over the mass-derived mean flow [Pa*s/m^3]."""
    q = rec.flow
    if not q > 0 or not math.isfinite(rec.delta_p / q):
        raise ZeroFlow(f"test flow {q:g} m^3/s is zero; resistance undefined")
    return rec.delta_p / q


def compliance_from_test(rec: ComplianceTestRecord) -> float:
    """Reciprocal effective bulk modulus, as a compliance in m^3/Pa.

    The reciprocal modulus is scaled by COMPLIANCE_REFERENCE_VOLUME (1 mL),
    the convention under which the identified line compliance is quoted.
    """
    return rec.injected_volume / (rec.delta_p * rec.total_volume) * COMPLIANCE_REFERENCE_VOLUME


@dataclass(frozen=True, eq=False)
class InertanceScores:
    candidates: np.ndarray
    scores: np.ndarray  # RMSE in Pa per candidate
    best: float


def _score_table(trace_t, trace_p_in, trace_p_out, params, geom, curve, speed,
                 candidates, h, target, warmup_revs):
    t_end = float(trace_t[-1] - trace_t[0])
    train = build_train(curve, geom, speed, h, t_end)
    t_grid = train.times
    # the simulation grid may overrun the trace end by less than one step
    t_grid = t_grid[t_grid <= t_end + 1e-12]
    ref_in = resample(trace_t - trace_t[0], trace_p_in, t_grid) if trace_p_in is not None else None
    ref_out = resample(trace_t - trace_t[0], trace_p_out, t_grid) if trace_p_out is not None else None

    scores = np.empty(len(candidates))
    for i, L in enumerate(candidates):
        result = simulate(params.with_inertance(L), geom, train, speed)
        k0 = result.warmup_index(warmup_revs)
        n = len(t_grid)
        parts = []
        if target in ("p_in", "both"):
            parts.append(rmse(AlignedSeries(t_grid[k0:], ref_in[k0:], result.p_in[k0:n])))
        if target in ("p_out", "both"):
            parts.append(rmse(AlignedSeries(t_grid[k0:], ref_out[k0:], result.p_out[k0:n])))
        scores[i] = math.sqrt(math.fsum(p * p for p in parts) / len(parts))
    return scores


def fit_inertance(trace_t, trace_p_in, params: NetworkParams, geom: PumpGeometry,
                  curve: RollerDisplacementCurve, L_grid,
                  speed: MotorSpeed | None = None, trace_p_out=None,
                  target: str = "p_in", h: float = 1e-3, warmup_revs: float = 2.0,
                  return_scores: bool = False):
    """Pick the inertance (shared by both lines) that best reproduces a trace.

    Each candidate in ``L_grid`` [Pa*s^2/m^3] is simulated and scored by
    RMSE against the trace after the warm-up window; ``target`` selects the
    inlet trace, the outlet trace, or both. Raises NoConvergence (carrying
    the best candidate) when the optimum lies on a grid endpoint.
    """
    if target not in ("p_in", "p_out", "both"):
        raise ValueError(f"target must be p_in, p_out or both, got {target!r}")
    speed = speed or MotorSpeed.from_rpm(100.0)
    trace_t = np.asarray(trace_t, dtype=float)
    if len(trace_t) < 2 or np.max(np.diff(trace_t)) > 1e-3 + 1e-12:
        raise ValueError("trace must be sampled at 1 kHz or faster")
    if target != "p_in" and trace_p_out is None:
        raise ValueError(f"target {target!r} needs an outlet trace")
    if target == "p_out":
        trace_p_in = None
    candidates = np.sort(np.asarray(L_grid, dtype=float))
    if candidates.size == 0 or np.any(candidates <= 0):
        raise ValueError("inertance grid must be non-empty and positive")

    scores = _score_table(trace_t, trace_p_in, trace_p_out, params, geom, curve, speed,
                          candidates, h, target, warmup_revs)
    lowest = scores.min()
    tied = np.flatnonzero(scores <= lowest + _TIE_RTOL * max(abs(lowest), 1e-30))
    i_best = int(tied[0])
    best = float(candidates[i_best])
    table = InertanceScores(candidates, scores, best)
    if i_best in (0, len(candidates) - 1):
        raise NoConvergence(
            f"best inertance {best:g} Pa*s^2/m^3 is a grid endpoint; widen the grid",
            inertance=best, scores=table)
    return (best, table) if return_scores else best
