"""Flow-centric lumped-parameter model of roller-type peristaltic pumps."""

from .analysis import AlignedSeries, fundamental_frequency, nrmse, pearson, rmse
from .calibration import (ComplianceTestRecord, ResistanceTestRecord, compliance_from_test,
                          fit_inertance, resistance_from_test)
from .displacement import (DisplacementSample, RollerDisplacementCurve, fit_displacement,
                           pulse_shape, reference_curve)
from .geometry import (MotorSpeed, PumpGeometry, average_flow, nominal_flow,
                       nominal_volume_per_rotation, reference_geometry, volume_per_rotation)
from .network import (NetworkParams, NetworkState, SimulationResult, dc_fixed_point,
                      derivatives, reference_params, simulate)
from .pulses import PulseTrain, build_train, pulse_period, separation_period

__version__ = "0.1.0"

__all__ = [
    "AlignedSeries", "fundamental_frequency", "nrmse", "pearson", "rmse",
    "ComplianceTestRecord", "ResistanceTestRecord", "compliance_from_test", "fit_inertance",
    "resistance_from_test",
    "DisplacementSample", "RollerDisplacementCurve", "fit_displacement", "pulse_shape",
    "reference_curve",
    "MotorSpeed", "PumpGeometry", "average_flow", "nominal_flow", "nominal_volume_per_rotation",
    "reference_geometry", "volume_per_rotation",
    "NetworkParams", "NetworkState", "SimulationResult", "dc_fixed_point", "derivatives",
    "reference_params", "simulate",
    "PulseTrain", "build_train", "pulse_period", "separation_period",
]
