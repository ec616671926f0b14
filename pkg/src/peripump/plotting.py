"""Static figures from the CSV files the CLI writes."""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

WAVEFORM_COLUMNS = ("t_s", "p_in_kpa", "p_out_kpa")
TRAIN_COLUMNS = ("t_s", "q_ed_in_ml_s", "q_ed_out_ml_s")
VOLUME_COLUMNS = ("speed_rpm", "model_volume_ml", "measured_volume_ml")


def _read_columns(path: Path) -> dict[str, np.ndarray]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [r for r in reader if r]
    if not header or not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    return {name: data[:, i] for i, name in enumerate(header)}


def count_pulses(q) -> int:
    """Number of zero-to-positive transitions (a pulse starting at t=0 counts)."""
    active = np.asarray(q) > 0
    return int(active[0]) + int(np.count_nonzero(active[1:] & ~active[:-1]))


def _save(fig, target: Path, metadata: dict) -> None:
    # write beside the target and rename so a failure leaves no partial file
    fd, tmp = tempfile.mkstemp(suffix=".png", dir=target.parent)
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=120,
                    metadata={"Software": None, "Description": "; ".join(
                        f"{k}={v}" for k, v in metadata.items())})
        os.replace(tmp, target)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)


def plot_file(path, output_dir=None) -> Path:
    """Render one waveform, pulse-train or volume-table CSV to a PNG."""
    path = Path(path)
    cols = _read_columns(path)
    out_dir = Path(output_dir) if output_dir else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / (path.stem + ".png")

    if all(c in cols for c in TRAIN_COLUMNS):
        t = cols["t_s"]
        fig, ax = plt.subplots(figsize=(8, 3.5))
        ax.plot(t, cols["q_ed_in_ml_s"], label="inlet $Q_{ed,in}$")
        ax.plot(t, -cols["q_ed_out_ml_s"], label="outlet $-Q_{ed,out}$")
        ax.set_xlabel("time [s]")
        ax.set_ylabel("roller-induced flow [mL/s]")
        ax.legend(loc="upper right")
        span = t[-1] - t[0]
        n_in, n_out = count_pulses(cols["q_ed_in_ml_s"]), count_pulses(cols["q_ed_out_ml_s"])
        meta = {"kind": "pulse-train", "inlet_pulses": n_in, "outlet_pulses": n_out,
                "inlet_pulses_per_s": f"{n_in / span:.6g}" if span > 0 else "nan"}
    elif all(c in cols for c in WAVEFORM_COLUMNS):
        t = cols["t_s"]
        fig, ax = plt.subplots(figsize=(8, 3.5))
        ax.plot(t, cols["p_in_kpa"], label="$P_{in}$")
        ax.plot(t, cols["p_out_kpa"], label="$P_{out}$")
        ax.set_xlabel("time [s]")
        ax.set_ylabel("pressure [kPa]")
        ax.legend(loc="upper right")
        meta = {"kind": "waveform", "samples": len(t)}
    elif all(c in cols for c in VOLUME_COLUMNS):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(cols["speed_rpm"], cols["model_volume_ml"], "--", label="model")
        measured = cols["measured_volume_ml"]
        if np.any(np.isfinite(measured)):
            ax.plot(cols["speed_rpm"], measured, "o", label="measured")
        ax.set_xlabel("motor speed [r/min]")
        ax.set_ylabel("volume per 10 rotations [mL]")
        ax.legend()
        meta = {"kind": "volume-table", "rows": len(measured)}
    else:
        raise ValueError(f"{path}: unrecognised columns {sorted(cols)}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, target, meta)
    return target
