"""Delimited output files and their metadata sidecars."""

from __future__ import annotations

import csv
import json
import subprocess
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__


def version_string() -> str:
    """``v<version>`` plus ``-g<commit>`` when run from a git checkout."""
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return f"v{__version__}"
    commit = out.stdout.strip()
    return f"v{__version__}-g{commit}" if out.returncode == 0 and commit else f"v{__version__}"


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_table(path: str | Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    return path


def write_sidecar(data_path: str | Path, config: dict, **extra) -> Path:
    """``<data file>.meta.json`` echoing the run configuration and tool version."""
    data_path = Path(data_path)
    meta = {"file": data_path.name, "version": version_string(), "config": config, **extra}
    side = data_path.with_name(data_path.name + ".meta.json")
    side.write_text(json.dumps(meta, indent=2) + "\n")
    return side
