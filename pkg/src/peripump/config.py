"""Run configuration: a sectioned YAML file with unit-suffixed keys.

Every numeric key names its unit (``_mm``, ``_deg``, ``_ml``, ``_kpa``,
``_rpm``, ``_s`` ...). Values are converted to SI only when model objects are
built, so a config round-trips unchanged.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .displacement import RollerDisplacementCurve, fit_displacement, read_displacement_csv, reference_samples
from .errors import ConfigError
from .geometry import PumpGeometry
from .network import NetworkParams
from .units import KPA, KPA_S2_PER_ML, KPA_S_PER_ML, ML, ML_PER_KPA, MM

UNIT_SUFFIXES = ("_mm", "_deg", "_ml", "_kpa", "_rpm", "_s", "_per_ml", "_per_kpa", "_revs")


@dataclass
class GeometryConfig:
    inner_tube_radius_mm: float = 5.0
    outer_tube_radius_mm: float = 7.0
    backplate_radius_mm: float = 63.0
    roller_radius_mm: float = 20.0
    roller_offset_radius_mm: float = 40.0
    contact_angle_deg: float = 30.0
    max_roller_volume_ml: float = 2.06
    # "auto" takes the fitted displacement support width
    engagement_angle_deg: float | str = "auto"


@dataclass
class NetworkConfig:
    reservoir_pressure_kpa: float = 88.637
    inlet_resistance_kpa_s_per_ml: float = 0.1108
    outlet_resistance_kpa_s_per_ml: float = 0.1108
    inlet_compliance_ml_per_kpa: float = 0.0361
    outlet_compliance_ml_per_kpa: float = 0.0361
    inlet_inertance_kpa_s2_per_ml: float = 0.0042
    outlet_inertance_kpa_s2_per_ml: float = 0.0042


@dataclass
class SolverConfig:
    step_s: float = 0.001
    duration_s: float = 10.0
    warmup_revs: float = 2.0
    init: str = "auto"


@dataclass
class SweepConfig:
    speeds_rpm: list = field(default_factory=lambda: [50.0, 100.0, 150.0])
    roller_counts: list = field(default_factory=lambda: [3])


@dataclass
class PathsConfig:
    rvd_csv: str | None = None          # None: packaged reference data
    trace_dir: str | None = None        # files named nu{N}_{rpm}rpm.csv
    measured_volumes_csv: str | None = None
    output_dir: str = "results"


_SECTIONS = {
    "geometry": GeometryConfig,
    "network": NetworkConfig,
    "solver": SolverConfig,
    "sweep": SweepConfig,
    "paths": PathsConfig,
}
# keys exempt from the unit-suffix rule
_UNITLESS = {"init", "roller_counts", "rvd_csv", "trace_dir", "measured_volumes_csv", "output_dir"}


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)
    source: str = field(default="<defaults>", compare=False, repr=False)

    def to_dict(self) -> dict:
        return {name: dataclasses.asdict(getattr(self, name)) for name in _SECTIONS}

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path).expanduser()
        return p if p.is_absolute() else self.base_dir / p

    # -- model objects -----------------------------------------------------
    def displacement_curve(self) -> RollerDisplacementCurve:
        rvd = self.resolve(self.paths.rvd_csv)
        samples = reference_samples() if rvd is None else read_displacement_csv(rvd)
        return fit_displacement(samples)

    def pump_geometry(self, roller_count: int,
                      curve: RollerDisplacementCurve | None = None) -> PumpGeometry:
        g = self.geometry
        phi = g.engagement_angle_deg
        if phi == "auto":
            curve = curve or self.displacement_curve()
            phi = curve.width_deg
        return PumpGeometry(
            inner_tube_radius=g.inner_tube_radius_mm * MM,
            outer_tube_radius=g.outer_tube_radius_mm * MM,
            backplate_radius=g.backplate_radius_mm * MM,
            roller_radius=g.roller_radius_mm * MM,
            roller_offset_radius=g.roller_offset_radius_mm * MM,
            contact_angle_deg=g.contact_angle_deg,
            roller_count=int(roller_count),
            max_roller_volume=g.max_roller_volume_ml * ML,
            engagement_angle_deg=float(phi),
        )

    def network_params(self) -> NetworkParams:
        n = self.network
        return NetworkParams(
            P_res=n.reservoir_pressure_kpa * KPA,
            R_in=n.inlet_resistance_kpa_s_per_ml * KPA_S_PER_ML,
            R_out=n.outlet_resistance_kpa_s_per_ml * KPA_S_PER_ML,
            C_in=n.inlet_compliance_ml_per_kpa * ML_PER_KPA,
            C_out=n.outlet_compliance_ml_per_kpa * ML_PER_KPA,
            L_in=n.inlet_inertance_kpa_s2_per_ml * KPA_S2_PER_ML,
            L_out=n.outlet_inertance_kpa_s2_per_ml * KPA_S2_PER_ML,
        )


def _coerce(source, section, key, default, value):
    where = f"{source}: {section}.{key}"
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        cast = int if key == "roller_counts" else float
        try:
            return [cast(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: list entries must be numbers, got {value!r}") from None
    if key == "engagement_angle_deg" and value == "auto":
        return value
    if isinstance(default, str) and key == "init":
        return str(value)
    if key in _UNITLESS:
        return None if value is None else str(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def from_dict(data: dict, source: str = "<dict>", base_dir: Path | None = None) -> RunConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping of sections")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: section {name!r} must be a mapping")
        defaults = cls()
        values = {}
        for key, value in raw.items():
            if not hasattr(defaults, key):
                raise ConfigError(f"{source}: {name}.{key}: unknown key")
            if key not in _UNITLESS and not key.endswith(UNIT_SUFFIXES):
                raise ConfigError(f"{source}: {name}.{key}: key lacks a unit suffix")
            values[key] = _coerce(source, name, key, getattr(defaults, key), value)
        sections[name] = dataclasses.replace(defaults, **values)
    cfg = RunConfig(**sections, base_dir=base_dir or Path("."), source=source)
    if cfg.solver.init != "auto":
        raise ConfigError(f"{source}: solver.init: only 'auto' is supported, got {cfg.solver.init!r}")
    return cfg


def load_config(path) -> RunConfig:
    """Parse a config file and check that every referenced path exists."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}".replace("\n", " ")) from None
    cfg = from_dict(data, source=str(path), base_dir=path.parent)
    check_paths(cfg)
    return cfg


def check_paths(cfg: RunConfig) -> None:
    for key in ("rvd_csv", "measured_volumes_csv"):
        p = cfg.resolve(getattr(cfg.paths, key))
        if p is not None and not p.is_file():
            raise ConfigError(f"{cfg.source}: paths.{key}: file not found: {p}")
    trace_dir = cfg.resolve(cfg.paths.trace_dir)
    if trace_dir is not None and not trace_dir.is_dir():
        raise ConfigError(f"{cfg.source}: paths.trace_dir: directory not found: {trace_dir}")
