"""Sweep-level workflows behind the CLI subcommands."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import AlignedSeries, fundamental_frequency, nrmse, pearson, resample, rmse
from .errors import MissingTrace, NoDominantPeak, PumpModelError
from .geometry import MotorSpeed, average_flow, nominal_flow, volume_per_rotation
from .network import simulate
from .pulses import build_train, write_train_csv
from .units import KPA, ML

log = logging.getLogger(__name__)

STRONG_CORRELATION = 0.7
VOLUME_TEST_ROTATIONS = 10


def run_tag(roller_count: int, rpm: float) -> str:
    return f"nu{int(roller_count)}_{rpm:g}rpm"


@dataclass
class SweepRun:
    roller_count: int
    rpm: float
    geom: object
    speed: MotorSpeed
    train: object
    result: object


def _sweep_points(cfg):
    return [(int(nu), float(rpm)) for nu in cfg.sweep.roller_counts for rpm in cfg.sweep.speeds_rpm]


def _run_one(cfg, curve, params, roller_count, rpm, duration=None):
    geom = cfg.pump_geometry(roller_count, curve)
    speed = MotorSpeed.from_rpm(rpm)
    train = build_train(curve, geom, speed, cfg.solver.step_s, duration or cfg.solver.duration_s)
    result = simulate(params, geom, train, speed, init=cfg.solver.init)
    return SweepRun(roller_count, rpm, geom, speed, train, result)


def run_sweep(cfg, workers: int | None = None, durations: dict | None = None) -> list[SweepRun]:
    """Simulate every (roller count, speed) pair; order follows the config."""
    curve = cfg.displacement_curve()
    params = cfg.network_params()
    points = _sweep_points(cfg)
    durations = durations or {}

    def job(point):
        return _run_one(cfg, curve, params, *point, duration=durations.get(point))

    if workers == 1 or len(points) <= 1:
        return [job(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, points))


def summarize(run: SweepRun, warmup_revs: float) -> dict:
    r = run.result
    k0 = r.warmup_index(warmup_revs)
    q_nom = nominal_flow(run.geom, run.speed)
    # average the inlet pulse train over whole pulse periods from the first pulse
    starts = [s for s in run.train.inlet_starts if s >= 0]
    q_train = float("nan")
    if len(starts) >= 2:
        q_train = q_nom - float(np.mean(run.train.q_ed_in[starts[0]:starts[-1]]))
    try:
        f0 = fundamental_frequency(r.p_in[k0:], r.h)
    except NoDominantPeak:
        f0 = float("nan")
    return {
        "roller_count": run.roller_count,
        "speed_rpm": run.rpm,
        "q_nom_ml_s": q_nom / ML,
        "q_avg_model_ml_s": average_flow(run.geom, run.speed) / ML,
        "q_avg_train_ml_s": q_train / ML,
        "mean_q_l_in_ml_s": float(np.mean(r.q_l_in[k0:])) / ML,
        "mean_q_l_out_ml_s": float(np.mean(r.q_l_out[k0:])) / ML,
        "p_in_mean_kpa": float(np.mean(r.p_in[k0:])) / KPA,
        "p_in_p2p_kpa": float(np.ptp(r.p_in[k0:])) / KPA,
        "p_out_mean_kpa": float(np.mean(r.p_out[k0:])) / KPA,
        "p_out_p2p_kpa": float(np.ptp(r.p_out[k0:])) / KPA,
        "p_in_fundamental_hz": f0,
    }


def _write_rows(path: Path, rows: list[dict], fields=None) -> None:
    fields = fields or (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.9g}" if isinstance(v, float) else v) for k, v in row.items()})


def cmd_simulate(cfg, output_dir=None, dump_trains: bool = True, workers=None) -> list[Path]:
    """Simulate the sweep and write waveform CSVs plus ``summary.csv``."""
    out = Path(output_dir) if output_dir else cfg.resolve(cfg.paths.output_dir)
    if not _sweep_points(cfg):
        log.warning("sweep is empty; nothing to simulate")
        return []
    runs = run_sweep(cfg, workers=workers)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for run in runs:
        tag = run_tag(run.roller_count, run.rpm)
        path = out / f"waveform_{tag}.csv"
        run.result.write_csv(path)
        written.append(path)
        if dump_trains:
            path = out / f"train_{tag}.csv"
            write_train_csv(run.train, path)
            written.append(path)
    summary = out / "summary.csv"
    _write_rows(summary, [summarize(r, cfg.solver.warmup_revs) for r in runs])
    written.append(summary)
    return written


def read_trace_csv(path):
    """Read a ``t_s,p_in_kpa,p_out_kpa`` pressure trace; returns SI arrays."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"t_s", "p_in_kpa", "p_out_kpa"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
        rows = [(float(r["t_s"]), float(r["p_in_kpa"]), float(r["p_out_kpa"])) for r in reader]
    if len(rows) < 2:
        raise ValueError(f"{path}: trace has fewer than two samples")
    data = np.array(rows)
    return data[:, 0], data[:, 1] * KPA, data[:, 2] * KPA


def write_trace_csv(path, t, p_in, p_out) -> None:
    np.savetxt(path, np.column_stack([t, np.asarray(p_in) / KPA, np.asarray(p_out) / KPA]),
               delimiter=",", fmt="%.9g", header="t_s,p_in_kpa,p_out_kpa", comments="")


def compare_run(run: SweepRun, trace, warmup_revs: float) -> dict:
    t_tr, p_in_tr, p_out_tr = trace
    r = run.result
    t = r.t[r.t <= (t_tr[-1] - t_tr[0]) + 1e-12]
    k0 = r.warmup_index(warmup_revs)
    n = len(t)
    row = {"roller_count": run.roller_count, "speed_rpm": run.rpm}
    for line, sim, meas in (("in", r.p_in, p_in_tr), ("out", r.p_out, p_out_tr)):
        ref = resample(t_tr - t_tr[0], meas, t)
        s = AlignedSeries(t[k0:], ref[k0:], sim[k0:n])
        try:
            rho = pearson(s)
        except PumpModelError:
            rho = float("nan")
        row[f"pearson_{line}"] = rho
        row[f"rmse_{line}_kpa"] = rmse(s) / KPA
        row[f"nrmse_mean_{line}"] = nrmse(s, "mean")
        try:
            row[f"nrmse_range_{line}"] = nrmse(s, "range")
        except PumpModelError:
            row[f"nrmse_range_{line}"] = float("nan")
    row["strong"] = bool(row["pearson_in"] >= STRONG_CORRELATION and
                         row["pearson_out"] >= STRONG_CORRELATION)
    return row


def cmd_compare(cfg, trace_dir=None, output_dir=None, workers=None) -> list[dict]:
    """Compare simulated port pressures with measured traces per sweep point."""
    tdir = Path(trace_dir) if trace_dir else cfg.resolve(cfg.paths.trace_dir)
    if tdir is None:
        raise MissingTrace("no trace directory given (paths.trace_dir or --trace-dir)")
    traces, durations = {}, {}
    for point in _sweep_points(cfg):
        path = tdir / f"{run_tag(*point)}.csv"
        if not path.is_file():
            raise MissingTrace(f"no trace for {run_tag(*point)}: {path}")
        traces[point] = read_trace_csv(path)
        t = traces[point][0]
        durations[point] = min(cfg.solver.duration_s, float(t[-1] - t[0]))
    runs = run_sweep(cfg, workers=workers, durations=durations)
    rows = [compare_run(run, traces[(run.roller_count, run.rpm)], cfg.solver.warmup_revs)
            for run in runs]

    out = Path(output_dir) if output_dir else cfg.resolve(cfg.paths.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if rows:
        _write_rows(out / "comparison.csv", rows)
    (out / "comparison.txt").write_text(format_comparison(rows, cfg.solver.warmup_revs))
    return rows


def format_comparison(rows, warmup_revs) -> str:
    lines = [
        f"# statistics exclude the first {warmup_revs:g} pump revolutions",
        "# NRMSE reported against reference mean and reference range",
        f"# strong correlation: pearson >= {STRONG_CORRELATION} on both lines",
        f"{'NU':>3} {'rpm':>6} {'rho_in':>7} {'rho_out':>7} {'rmse_in':>8} {'rmse_out':>8} "
        f"{'nrmse_in':>8} {'nrmse_out':>9}  flag",
    ]
    for r in rows:
        flag = "" if r["strong"] else "WEAK"
        lines.append(
            f"{r['roller_count']:>3} {r['speed_rpm']:>6g} {r['pearson_in']:>7.3f} "
            f"{r['pearson_out']:>7.3f} {r['rmse_in_kpa']:>8.3f} {r['rmse_out_kpa']:>8.3f} "
            f"{r['nrmse_mean_in']:>8.2%} {r['nrmse_mean_out']:>9.2%}  {flag}")
    return "\n".join(lines) + "\n"


def read_measured_volumes(path) -> dict:
    """``roller_count,speed_rpm,volume_ml`` rows keyed by (roller_count, rpm)."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"roller_count", "speed_rpm", "volume_ml"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
        return {(int(r["roller_count"]), float(r["speed_rpm"])): float(r["volume_ml"]) * ML
                for r in reader}


def volume_table(cfg, measured: dict | None = None) -> tuple[list[dict], dict]:
    """Modelled 10-rotation volumes per sweep point, with deviations and
    per-roller-count NRMSE (mean-normalised) where measurements exist."""
    measured = measured or {}
    curve = None
    if cfg.geometry.engagement_angle_deg == "auto":
        curve = cfg.displacement_curve()
    rows, nrmse_by_nu = [], {}
    for nu in cfg.sweep.roller_counts:
        v_model = VOLUME_TEST_ROTATIONS * volume_per_rotation(cfg.pump_geometry(nu, curve))
        pairs = []
        for rpm in cfg.sweep.speeds_rpm:
            meas = measured.get((int(nu), float(rpm)))
            row = {"roller_count": int(nu), "speed_rpm": float(rpm), "model_volume_ml": v_model / ML,
                   "measured_volume_ml": float("nan"), "deviation_pct": float("nan")}
            if meas is not None:
                row["measured_volume_ml"] = meas / ML
                row["deviation_pct"] = 100.0 * (v_model - meas) / meas
                pairs.append((meas, v_model))
            rows.append(row)
        if pairs:
            meas_arr = np.array([p[0] for p in pairs])
            err = np.array([p[1] - p[0] for p in pairs])
            nrmse_by_nu[int(nu)] = math.sqrt(float(np.mean(err**2))) / float(np.mean(meas_arr))
    return rows, nrmse_by_nu


def cmd_volume_table(cfg, measured_csv=None, output_dir=None) -> Path:
    path = measured_csv or cfg.resolve(cfg.paths.measured_volumes_csv)
    measured = read_measured_volumes(path) if path else {}
    rows, nrmse_by_nu = volume_table(cfg, measured)
    out = Path(output_dir) if output_dir else cfg.resolve(cfg.paths.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "volume_table.csv"
    _write_rows(target, rows, ["roller_count", "speed_rpm", "model_volume_ml",
                               "measured_volume_ml", "deviation_pct"])
    if nrmse_by_nu:
        _write_rows(out / "volume_nrmse.csv",
                    [{"roller_count": nu, "nrmse": v} for nu, v in sorted(nrmse_by_nu.items())])
    return target
