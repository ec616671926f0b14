"""Flow-centric electrical-analogue network of the pump and its two lines.

State order everywhere is (P_in, P_out, Q_L_in, Q_L_out). The pump itself is
three flow sources: the constant nominal flow and the roller pulses that
oppose it at the inlet and outlet. Each line is a series R-L to the
reservoir with a compliance at the pump port.

Pulse trains hold non-negative magnitudes. Both pulses oppose the normal
flow direction: the engaging roller draws less from the inlet line and the
disengaging roller delivers less into the outlet line, so
Q_in = Q_nom - q_ed_in and Q_out = Q_nom - q_ed_out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NonFiniteState, SolverDivergence
from .geometry import MotorSpeed, PumpGeometry, nominal_flow
from .pulses import PulseTrain
from .units import KPA, KPA_S2_PER_ML, KPA_S_PER_ML, ML, ML_PER_KPA

# state scaling used inside the integrator: kPa and mL/s
_SCALE = np.array([KPA, KPA, ML, ML])


@dataclass(frozen=True)
class NetworkParams:
    P_res: float   # Pa
    R_in: float    # Pa*s/m^3
    R_out: float
    C_in: float    # m^3/Pa
    C_out: float
    L_in: float    # Pa*s^2/m^3
    L_out: float

    def __post_init__(self):
        for name in ("P_res", "R_in", "R_out", "C_in", "C_out", "L_in", "L_out"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"network parameter {name} must be finite and > 0, got {value}")

    def with_inertance(self, L: float) -> NetworkParams:
        return NetworkParams(self.P_res, self.R_in, self.R_out, self.C_in, self.C_out, L, L)


def reference_params() -> NetworkParams:
    """Line parameters identified for the validation test bench."""
    return NetworkParams(
        P_res=88.637 * KPA,
        R_in=0.1108 * KPA_S_PER_ML,
        R_out=0.1108 * KPA_S_PER_ML,
        C_in=0.0361 * ML_PER_KPA,
        C_out=0.0361 * ML_PER_KPA,
        L_in=0.0042 * KPA_S2_PER_ML,
        L_out=0.0042 * KPA_S2_PER_ML,
    )


@dataclass(frozen=True)
class NetworkState:
    P_in: float
    P_out: float
    Q_L_in: float
    Q_L_out: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise NonFiniteState(f"non-finite network state {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.P_in, self.P_out, self.Q_L_in, self.Q_L_out], dtype=float)

    @classmethod
    def from_array(cls, x) -> NetworkState:
        return cls(*(float(v) for v in x))


@dataclass(frozen=True, eq=False)
class SimulationResult:
    t: np.ndarray
    p_in: np.ndarray
    p_out: np.ndarray
    q_l_in: np.ndarray
    q_l_out: np.ndarray
    q_in: np.ndarray
    q_out: np.ndarray
    h: float
    omega: float
    roller_count: int
    steps: int
    max_newton_iterations: int
    backend: str = field(default=_kernels.BACKEND)

    def __len__(self):
        return len(self.t)

    def state(self, k: int) -> NetworkState:
        return NetworkState(self.p_in[k], self.p_out[k], self.q_l_in[k], self.q_l_out[k])

    def warmup_index(self, revolutions: float = 2.0) -> int:
        """First grid index after ``revolutions`` pump turns."""
        if self.omega <= 0 or revolutions <= 0:
            return 0
        return min(len(self.t) - 1, int(math.ceil(revolutions * 2 * math.pi / self.omega / self.h - 1e-9)))

    def write_csv(self, path) -> None:
        cols = [self.t, self.p_in / KPA, self.p_out / KPA, self.q_l_in / ML,
                self.q_l_out / ML, self.q_in / ML, self.q_out / ML]
        np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.9g", comments="",
                   header="t_s,p_in_kpa,p_out_kpa,q_l_in_ml_s,q_l_out_ml_s,q_in_ml_s,q_out_ml_s")


def derivatives(state: NetworkState, params: NetworkParams, q_nom: float,
                q_ed_in: float, q_ed_out: float) -> NetworkState:
    """Time derivative of the network state for the given source values."""
    p = params
    q_in = q_nom - q_ed_in
    q_out = q_nom - q_ed_out
    return NetworkState(
        P_in=(state.Q_L_in - q_in) / p.C_in,
        P_out=(q_out - state.Q_L_out) / p.C_out,
        Q_L_in=(p.P_res - state.P_in - p.R_in * state.Q_L_in) / p.L_in,
        Q_L_out=(state.P_out - p.P_res - p.R_out * state.Q_L_out) / p.L_out,
    )


def dc_fixed_point(params: NetworkParams, q_nom: float) -> NetworkState:
    return NetworkState(params.P_res - params.R_in * q_nom,
                        params.P_res + params.R_out * q_nom,
                        q_nom, q_nom)


def system_matrices(params: NetworkParams):
    """State matrix A and the pulse input matrix B for the deviation
    y = x - dc_fixed_point, so that y' = A y + B [q_ed_in, q_ed_out]."""
    p = params
    A = np.array([
        [0.0, 0.0, 1.0 / p.C_in, 0.0],
        [0.0, 0.0, 0.0, -1.0 / p.C_out],
        [-1.0 / p.L_in, 0.0, -p.R_in / p.L_in, 0.0],
        [0.0, 1.0 / p.L_out, 0.0, -p.R_out / p.L_out],
    ])
    B = np.array([
        [1.0 / p.C_in, 0.0],
        [0.0, -1.0 / p.C_out],
        [0.0, 0.0],
        [0.0, 0.0],
    ])
    return A, B


def trapezoid_operators(params: NetworkParams, h: float):
    """Scaled one-step operators of the implicit trapezoidal rule.

    Returns (P, W, B_s) in kPa / mL/s units with
    y[k+1] = P y[k] + W (B_s u[k] + B_s u[k+1]).
    The system is linear, so the Newton solve of every step is this single
    pre-factored linear map.
    """
    A, B = system_matrices(params)
    A_s = A * _SCALE[None, :] / _SCALE[:, None]
    B_s = B / _SCALE[:, None]
    eye = np.eye(4)
    lhs = eye - 0.5 * h * A_s
    try:
        P = np.linalg.solve(lhs, eye + 0.5 * h * A_s)
        W = np.linalg.solve(lhs, 0.5 * h * eye)
    except np.linalg.LinAlgError as exc:
        raise SolverDivergence(f"implicit step matrix is singular: {exc}") from exc
    return P, W, B_s


def simulate(params: NetworkParams, geom: PumpGeometry, train: PulseTrain,
             speed: MotorSpeed, init="auto", backend=None,
             q_nom: float | None = None) -> SimulationResult:
    """Integrate the network over the pulse train's grid with step ``train.h``.

    ``init="auto"`` starts from the DC fixed point at the nominal flow;
    otherwise pass a NetworkState. ``q_nom`` overrides the nominal flow
    computed from geometry and speed.
    """
    if q_nom is None:
        q_nom = nominal_flow(geom, speed)
    h = train.h
    x_dc = dc_fixed_point(params, q_nom).as_array()
    if isinstance(init, str):
        if init.lower() != "auto":
            raise ValueError(f"unknown init mode {init!r}")
        x0 = x_dc
    else:
        x0 = init.as_array()

    P, W, B_s = trapezoid_operators(params, h)
    u = np.column_stack([train.q_ed_in, train.q_ed_out])
    g = u @ B_s.T
    w = (g[:-1] + g[1:]) @ W.T
    y = _kernels.march(P, w, (x0 - x_dc) / _SCALE, backend=backend)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("integration produced non-finite values")
    x = y * _SCALE + x_dc

    return SimulationResult(
        t=train.times,
        p_in=x[:, 0], p_out=x[:, 1], q_l_in=x[:, 2], q_l_out=x[:, 3],
        q_in=q_nom - train.q_ed_in, q_out=q_nom - train.q_ed_out,
        h=h, omega=speed.omega, roller_count=geom.roller_count,
        steps=len(y) - 1, max_newton_iterations=1,
        backend=backend or _kernels.BACKEND,
    )
