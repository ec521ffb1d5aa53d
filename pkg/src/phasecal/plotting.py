"""Figures for experiment reports, rendered to files with the Agg backend."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"]
MARKERS = ["o", "s", "^", "v", "D", "x"]


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # no timestamp/software metadata so identical data gives identical files
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def _snr_axis(rows):
    return [r["snr_db"] for r in rows]


def plot_lines(rows: Sequence[dict], series: dict[str, str], ylabel: str, title: str,
               path: str | Path, logy: bool = False) -> Path:
    """One line per ``{column: label}`` against SNR."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    x = _snr_axis(rows)
    for n, (col, label) in enumerate(series.items()):
        ax.plot(x, [r[col] for r in rows], marker=MARKERS[n % len(MARKERS)],
                color=COLORS[n % len(COLORS)], label=label)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if logy:
        ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_sweep(rows: Sequence[dict], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        plot_lines(rows, {"err_max": "Err_max", "err_avg": "Err_avg",
                          "err_max_opt": "Err_max_opt", "err_avg_opt": "Err_avg_opt"},
                   "phase error (rad)", "Phase calibration error", out_dir / "sweep_phase.png", logy=True),
        plot_lines(rows, {"gain_err_max_db": "max", "gain_err_avg_db": "avg",
                          "gain_err_max_opt_db": "max (opt)", "gain_err_avg_opt_db": "avg (opt)"},
                   "gain error (dB)", "Gain calibration error", out_dir / "sweep_gain.png", logy=True),
    ]


def plot_rev(rows: Sequence[dict], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        plot_lines(rows, {"err_max_opt": "Err_max_opt", "err_avg_opt": "Err_avg_opt",
                          "err_max_REV": "Err_max_REV", "err_avg_REV": "Err_avg_REV"},
                   "phase error (rad)", "Explicit calibration vs REV: phase", out_dir / "rev_phase.png", logy=True),
        plot_lines(rows, {"gain_err_max_opt_db": "max (opt)", "gain_err_avg_opt_db": "avg (opt)",
                          "gain_err_max_REV_db": "max (REV)", "gain_err_avg_REV_db": "avg (REV)"},
                   "gain error (dB)", "Explicit calibration vs REV: gain", out_dir / "rev_gain.png", logy=True),
    ]


def plot_eirp_cdf(reports, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for n, rep in enumerate(reports):
        ax.plot(rep.scaled_eirp_db, rep.cum_prob, color=COLORS[n % len(COLORS)], label=rep.name)
    ax.set_xlabel("scaled EIRP (dB)")
    ax.set_ylabel("CDF")
    ax.set_title("EIRP coverage")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, loc="upper left")
    return _save(fig, path)
