import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from peripump.cli import main
from peripump.config import RunConfig, load_config
from peripump.geometry import MotorSpeed
from peripump.network import simulate
from peripump.pulses import build_train
from peripump.units import KPA
from peripump.workflows import read_trace_csv, write_trace_csv


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def make_config(tmp_path, **sweep):
    cfg = RunConfig()
    cfg.solver.duration_s = 3.0
    for key, value in sweep.items():
        setattr(cfg.sweep, key, value)
    path = tmp_path / "run.yaml"
    cfg.save(path)
    return path


def simulated_trace(nu, rpm, h, t_sim, offset=0.0):
    cfg = RunConfig()
    curve = cfg.displacement_curve()
    geom = cfg.pump_geometry(nu, curve)
    speed = MotorSpeed.from_rpm(rpm)
    r = simulate(cfg.network_params(), geom, build_train(curve, geom, speed, h, t_sim), speed)
    return r.t, r.p_in + offset, r.p_out + offset


class TestSimulate:
    def test_writes_waveforms_and_summary(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        code, out, _ = run(["simulate", "-c", cfg, "-o", tmp_path / "out"], capsys)
        assert code == 0
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert [n for n in names if n.startswith("waveform")] == [
            "waveform_nu3_100rpm.csv", "waveform_nu3_150rpm.csv", "waveform_nu3_50rpm.csv"]
        assert "summary.csv" in names
        summary = np.genfromtxt(tmp_path / "out" / "summary.csv", delimiter=",", names=True)
        assert list(summary["speed_rpm"]) == [50, 100, 150]
        assert np.allclose(summary["q_avg_model_ml_s"], summary["q_avg_train_ml_s"], rtol=0.01)

    def test_deterministic(self, tmp_path, capsys):
        cfg = make_config(tmp_path, speeds_rpm=[60.0, 120.0], roller_counts=[2, 3])
        run(["simulate", "-c", cfg, "-o", tmp_path / "a"], capsys)
        run(["simulate", "-c", cfg, "-o", tmp_path / "b", "--workers", "1"], capsys)
        for p in sorted((tmp_path / "a").iterdir()):
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()

    def test_empty_sweep(self, tmp_path, capsys):
        cfg = make_config(tmp_path, speeds_rpm=[])
        code, out, _ = run(["simulate", "-c", cfg, "-o", tmp_path / "out"], capsys)
        assert code == 0 and out == ""
        assert not (tmp_path / "out").exists()

    def test_overrides(self, tmp_path, capsys):
        code, out, _ = run(["simulate", "-o", tmp_path, "--speeds", "60", "--rollers", "2",
                            "--duration", "2", "--no-trains"], capsys)
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.csv",
                                                             "waveform_nu2_60rpm.csv"]
        data = np.loadtxt(tmp_path / "waveform_nu2_60rpm.csv", delimiter=",", skiprows=1)
        assert data[-1, 0] == pytest.approx(2.0)


class TestCompare:
    def write_traces(self, tdir, rpms, **kwargs):
        tdir.mkdir(exist_ok=True)
        for rpm in rpms:
            t, p_in, p_out = simulated_trace(3, rpm, **kwargs)
            write_trace_csv(tdir / f"nu3_{rpm:g}rpm.csv", t, p_in, p_out)

    def test_identical_traces(self, tmp_path, capsys):
        self.write_traces(tmp_path / "tr", [50, 100], h=1e-3, t_sim=3.0)
        cfg = make_config(tmp_path, speeds_rpm=[50.0, 100.0])
        code, out, _ = run(["compare", "-c", cfg, "--trace-dir", tmp_path / "tr",
                            "-o", tmp_path / "out"], capsys)
        assert code == 0
        rows = np.genfromtxt(tmp_path / "out" / "comparison.csv", delimiter=",", names=True)
        assert np.allclose(rows["pearson_in"], 1.0, atol=1e-9)
        assert np.all(rows["rmse_in_kpa"] < 1e-6)
        assert "exclude the first 2 pump revolutions" in out

    def test_offset_trace(self, tmp_path, capsys):
        self.write_traces(tmp_path / "tr", [100], h=1e-3, t_sim=3.0, offset=10 * KPA)
        cfg = make_config(tmp_path, speeds_rpm=[100.0])
        code, _, _ = run(["compare", "-c", cfg, "--trace-dir", tmp_path / "tr",
                          "-o", tmp_path / "out"], capsys)
        assert code == 0
        rows = np.genfromtxt(tmp_path / "out" / "comparison.csv", delimiter=",", names=True)
        assert rows["pearson_in"] == pytest.approx(1.0, abs=1e-9)
        assert rows["rmse_in_kpa"] == pytest.approx(10.0, rel=1e-6)
        assert rows["rmse_out_kpa"] == pytest.approx(10.0, rel=1e-6)

    def test_finer_step_oracle(self, tmp_path, capsys):
        self.write_traces(tmp_path / "tr", [100], h=5e-4, t_sim=3.0)
        cfg = make_config(tmp_path, speeds_rpm=[100.0])
        run(["compare", "-c", cfg, "--trace-dir", tmp_path / "tr", "-o", tmp_path / "out"],
            capsys)
        rows = np.genfromtxt(tmp_path / "out" / "comparison.csv", delimiter=",", names=True)
        assert rows["pearson_in"] >= 0.999 and rows["pearson_out"] >= 0.999

    def test_missing_trace(self, tmp_path, capsys):
        self.write_traces(tmp_path / "tr", [50], h=1e-3, t_sim=3.0)
        cfg = make_config(tmp_path, speeds_rpm=[50.0, 150.0])
        code, _, err = run(["compare", "-c", cfg, "--trace-dir", tmp_path / "tr",
                            "-o", tmp_path / "out"], capsys)
        assert code == 1
        assert err.startswith("error[missing-trace]:") and "nu3_150rpm" in err

    def test_trace_round_trip(self, tmp_path):
        t, p_in, p_out = simulated_trace(2, 60, h=1e-3, t_sim=1.0)
        write_trace_csv(tmp_path / "x.csv", t, p_in, p_out)
        t2, a, b = read_trace_csv(tmp_path / "x.csv")
        assert np.allclose(a, p_in, rtol=1e-8) and np.allclose(t2, t)


class TestVolumeTable:
    def test_against_measured(self, tmp_path, capsys):
        measured = tmp_path / "measured.csv"
        measured.write_text("roller_count,speed_rpm,volume_ml\n"
                            "3,100,212.53\n2,100,231.75\n")
        cfg = make_config(tmp_path, speeds_rpm=[100.0], roller_counts=[3, 2])
        code, out, _ = run(["volume-table", "-c", cfg, "--measured", measured,
                            "-o", tmp_path / "out"], capsys)
        assert code == 0
        rows = np.genfromtxt(tmp_path / "out" / "volume_table.csv", delimiter=",", names=True)
        assert rows["model_volume_ml"] == pytest.approx([214.56, 235.16], rel=1e-4)
        assert rows["deviation_pct"] == pytest.approx([0.95, 1.47], abs=0.01)
        assert (tmp_path / "out" / "volume_nrmse.csv").exists()

    def test_without_measurements(self, tmp_path, capsys):
        code, out, _ = run(["volume-table", "-o", tmp_path, "--rollers", "2"], capsys)
        assert code == 0
        assert "235.1" in out and "nan" in out


class TestOtherCommands:
    def test_fit_volume(self, tmp_path, capsys):
        csv = tmp_path / "rvd.csv"
        csv.write_text("angle_deg,volume_ml,run_id\n" + "".join(
            f"{a},{2.0 * (a / 40) ** 2 * (3 - 2 * a / 40):.6f},{r}\n"
            for r in (1, 2) for a in range(0, 41, 4)))
        code, out, _ = run(["fit-volume", csv, "-o", tmp_path / "fit.yaml"], capsys)
        assert code == 0
        assert "width_deg: 40.0" in out
        assert (tmp_path / "fit.yaml").read_text() == out

    def test_fit_volume_too_few_samples(self, tmp_path, capsys):
        csv = tmp_path / "rvd.csv"
        csv.write_text("angle_deg,volume_ml\n0,0\n10,0.5\n20,1.0\n")
        code, _, err = run(["fit-volume", csv], capsys)
        assert code == 1 and err.startswith("error[displacement]:")

    def test_calibrate(self, tmp_path, capsys):
        res = tmp_path / "res.csv"
        res.write_text("delta_p_kpa,mass_kg,duration_s,temp_c\n23.27,0.2095,1.0,25\n")
        comp = tmp_path / "comp.csv"
        comp.write_text("delta_p_kpa,delta_v_ml,v_total_ml\n10,3.61,10\n")
        code, out, _ = run(["calibrate", "--resistance", res, "--compliance", comp,
                            "-o", tmp_path / "cal.yaml"], capsys)
        assert code == 0
        cfg = load_config(tmp_path / "cal.yaml")
        assert cfg.network.inlet_resistance_kpa_s_per_ml == pytest.approx(0.1108, rel=1e-3)
        assert cfg.network.outlet_compliance_ml_per_kpa == pytest.approx(0.0361, rel=1e-9)

    def test_calibrate_inertance(self, tmp_path, capsys):
        t, p_in, p_out = simulated_trace(3, 100, h=1e-3, t_sim=4.0)
        write_trace_csv(tmp_path / "trace.csv", t, p_in, p_out)
        code, out, _ = run(["calibrate", "--trace", tmp_path / "trace.csv"], capsys)
        assert code == 0
        assert "inlet_inertance_kpa_s2_per_ml: 0.004" in out

    def test_init_config(self, tmp_path, capsys):
        code, _, _ = run(["init-config", tmp_path / "c.yaml"], capsys)
        assert code == 0 and "geometry:" in (tmp_path / "c.yaml").read_text()

    def test_plot_pulse_counts(self, tmp_path, capsys):
        run(["simulate", "-o", tmp_path, "--speeds", "60", "--rollers", "2", "3",
             "--duration", "2"], capsys)
        code, out, _ = run(["plot", tmp_path / "train_nu2_60rpm.csv",
                            tmp_path / "train_nu3_60rpm.csv", tmp_path / "waveform_nu3_60rpm.csv",
                            "-o", tmp_path / "fig"], capsys)
        assert code == 0
        meta2 = Image.open(tmp_path / "fig" / "train_nu2_60rpm.png").text["Description"]
        meta3 = Image.open(tmp_path / "fig" / "train_nu3_60rpm.png").text["Description"]
        assert "inlet_pulses=4" in meta2 and "inlet_pulses=6" in meta3
        assert (tmp_path / "fig" / "waveform_nu3_60rpm.png").stat().st_size > 0

    def test_plot_empty_csv(self, tmp_path, capsys):
        empty = tmp_path / "train_x.csv"
        empty.write_text("t_s,q_ed_in_ml_s,q_ed_out_ml_s\n")
        code, _, err = run(["plot", empty], capsys)
        assert code == 3 and err.startswith("error[value]:")
        assert list(tmp_path.glob("*.png")) == []


class TestEntryPoint:
    def test_error_line_and_status(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "peripump", "simulate", "-c",
                               str(tmp_path / "missing.yaml")], capture_output=True, text=True)
        assert proc.returncode == 1
        lines = proc.stderr.strip().splitlines()
        assert len(lines) == 1 and lines[0].startswith("error[config]:")
        assert "missing.yaml" in lines[0]
