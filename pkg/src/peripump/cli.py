"""Command-line entry point: ``peripump <subcommand> ...``.

On failure a single line ``error[<category>]: <message>`` goes to stderr and
the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import calibration, workflows
from .config import RunConfig, load_config
from .displacement import fit_displacement, read_displacement_csv
from .errors import NoConvergence, PumpModelError
from .geometry import MotorSpeed
from .units import KPA, KPA_S2_PER_ML, KPA_S_PER_ML, ML, ML_PER_KPA

log = logging.getLogger("peripump")

EXIT_MODEL_ERROR = 1
EXIT_IO_ERROR = 3


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "speeds", None) is not None:
        cfg.sweep.speeds_rpm = [float(s) for s in args.speeds]
    if getattr(args, "rollers", None) is not None:
        cfg.sweep.roller_counts = [int(n) for n in args.rollers]
    return cfg


def do_simulate(args):
    cfg = _config(args)
    if args.duration is not None:
        cfg.solver.duration_s = args.duration
    if args.step is not None:
        cfg.solver.step_s = args.step
    for path in workflows.cmd_simulate(cfg, args.output_dir, dump_trains=not args.no_trains,
                                       workers=args.workers):
        print(path)


def do_compare(args):
    cfg = _config(args)
    out = args.output_dir or cfg.resolve(cfg.paths.output_dir)
    rows = workflows.cmd_compare(cfg, args.trace_dir, out, workers=args.workers)
    sys.stdout.write(workflows.format_comparison(rows, cfg.solver.warmup_revs))


def do_volume_table(args):
    cfg = _config(args)
    target = workflows.cmd_volume_table(cfg, args.measured, args.output_dir)
    sys.stdout.write(Path(target).read_text())


def do_fit_volume(args):
    curve = fit_displacement(read_displacement_csv(args.csv))
    report = {
        "support_deg": [round(curve.support[0], 6), round(curve.support[1], 6)],
        "width_deg": round(curve.width_deg, 6),
        "v_max_ml": float(f"{curve.v_max / ML:.9g}"),
        # ascending powers of theta [deg], volume in mL
        "coefficients_ml": [float(f"{c / ML:.12g}") for c in curve.poly_coeffs],
    }
    text = yaml.safe_dump(report, sort_keys=False)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)


def _read_rows(path, required):
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(required) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def do_calibrate(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    net = cfg.network
    if args.resistance:
        rows = _read_rows(args.resistance, ("delta_p_kpa", "mass_kg", "duration_s", "temp_c"))
        values = [calibration.resistance_from_test(calibration.ResistanceTestRecord(
            float(r["delta_p_kpa"]) * KPA, float(r["mass_kg"]), float(r["duration_s"]),
            calibration.water_density(float(r["temp_c"])))) for r in rows]
        net.inlet_resistance_kpa_s_per_ml = net.outlet_resistance_kpa_s_per_ml = \
            float(np.mean(values)) / KPA_S_PER_ML
    if args.compliance:
        rows = _read_rows(args.compliance, ("delta_p_kpa", "delta_v_ml", "v_total_ml"))
        values = [calibration.compliance_from_test(calibration.ComplianceTestRecord(
            float(r["delta_p_kpa"]) * KPA, float(r["delta_v_ml"]) * ML,
            float(r["v_total_ml"]) * ML)) for r in rows]
        net.inlet_compliance_ml_per_kpa = net.outlet_compliance_ml_per_kpa = \
            float(np.mean(values)) / ML_PER_KPA
    if args.trace:
        t, p_in, p_out = workflows.read_trace_csv(args.trace)
        start, stop, step = args.l_grid
        grid = np.arange(start, stop + 0.5 * step, step) * KPA_S2_PER_ML
        curve = cfg.displacement_curve()
        geom = cfg.pump_geometry(args.rollers, curve)
        try:
            L = calibration.fit_inertance(
                t, p_in, cfg.network_params(), geom, curve, grid,
                speed=MotorSpeed.from_rpm(args.rpm), trace_p_out=p_out, target=args.target,
                h=cfg.solver.step_s, warmup_revs=cfg.solver.warmup_revs)
        except NoConvergence as exc:
            log.warning("%s", exc)
            L = exc.inertance
        net.inlet_inertance_kpa_s2_per_ml = net.outlet_inertance_kpa_s2_per_ml = \
            float(f"{L / KPA_S2_PER_ML:.9g}")
    text = cfg.dumps()
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)


def do_plot(args):
    from .plotting import plot_file
    for f in args.files:
        print(plot_file(f, args.output_dir))


def do_init_config(args):
    RunConfig().save(args.path)
    print(args.path)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="peripump", description="Simulate and calibrate roller peristaltic pump models.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p, sweep=True):
        p.add_argument("-c", "--config", help="YAML run config (defaults: reference pump)")
        p.add_argument("-o", "--output-dir", help="override paths.output_dir")
        if sweep:
            p.add_argument("--speeds", nargs="+", type=float, metavar="RPM")
            p.add_argument("--rollers", nargs="+", type=int, metavar="NU")
        return p

    p = with_config(sub.add_parser("simulate", help="simulate the configured sweep"))
    p.add_argument("--duration", type=float, help="simulated time [s]")
    p.add_argument("--step", type=float, help="time step [s]")
    p.add_argument("--no-trains", action="store_true", help="skip pulse-train CSV dumps")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=do_simulate)

    p = with_config(sub.add_parser("compare", help="compare simulations with measured traces"))
    p.add_argument("--trace-dir", help="directory of nu{N}_{rpm}rpm.csv traces")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=do_compare)

    p = with_config(sub.add_parser("volume-table", help="modelled 10-rotation volumes"))
    p.add_argument("--measured", help="roller_count,speed_rpm,volume_ml CSV")
    p.set_defaults(func=do_volume_table)

    p = sub.add_parser("fit-volume", help="fit V(theta) to roller displacement samples")
    p.add_argument("csv", help="angle_deg,volume_ml[,run_id] CSV")
    p.add_argument("-o", "--output", help="write the fit report here")
    p.set_defaults(func=do_fit_volume)

    p = sub.add_parser("calibrate", help="reduce bench data to line parameters")
    p.add_argument("-c", "--config", help="base config whose network section is updated")
    p.add_argument("--resistance", help="delta_p_kpa,mass_kg,duration_s,temp_c CSV")
    p.add_argument("--compliance", help="delta_p_kpa,delta_v_ml,v_total_ml CSV")
    p.add_argument("--trace", help="t_s,p_in_kpa,p_out_kpa CSV for the inertance fit")
    p.add_argument("--rpm", type=float, default=100.0)
    p.add_argument("--rollers", type=int, default=3)
    p.add_argument("--target", choices=("p_in", "p_out", "both"), default="p_in")
    p.add_argument("--l-grid", nargs=3, type=float, default=(0.001, 0.010, 0.0005),
                   metavar=("START", "STOP", "STEP"), help="inertance grid [kPa*s^2/mL]")
    p.add_argument("-o", "--output", help="write the updated config here")
    p.set_defaults(func=do_calibrate)

    p = sub.add_parser("plot", help="render CSV outputs to PNG")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output-dir")
    p.set_defaults(func=do_plot)

    p = sub.add_parser("init-config", help="write the default config")
    p.add_argument("path")
    p.set_defaults(func=do_init_config)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except PumpModelError as exc:
        print(f"error[{exc.category}]: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_MODEL_ERROR
    except (OSError, ValueError) as exc:
        category = "io" if isinstance(exc, OSError) else "value"
        print(f"error[{category}]: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_IO_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
