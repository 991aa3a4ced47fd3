"""CSV persistence for trajectories and sampled curves (17 significant digits)."""
from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence, Tuple

import numpy as np

from .cauchy import Field, Grid, Trajectory
from .config import ScenarioConfig, load_config
from .errors import ConfigError

FMT = "%.17g"
META = "meta.csv"
MODEL = "model.cfg"

PLOT_SCRIPT = '''\
"""Plot snapshots listed in meta.csv.  Usage: python3 plot.py [every]"""
import csv, os, sys
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
every = int(sys.argv[1]) if len(sys.argv) > 1 else 1
with open(os.path.join(here, "meta.csv")) as fh:
    rows = list(csv.DictReader(fh))
for row in rows[::every]:
    xs, us = [], []
    with open(os.path.join(here, row["filename"])) as fh:
        for r in csv.DictReader(fh):
            xs.append(float(r["x"]))
            us.append(float(r["u"]))
    plt.plot(xs, us, lw=0.8, label="t=" + row["t"])
plt.axvline(0.0, color="k", lw=0.5)
plt.xlabel("x")
plt.ylabel("u")
if len(rows[::every]) <= 12:
    plt.legend()
plt.savefig(os.path.join(here, "snapshots.png"), dpi=150)
'''


def write_columns(path: str, header: Sequence[str], cols: Iterable[np.ndarray],
                  comment: str = None) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in cols])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=FMT, delimiter=",")


def read_columns(path: str) -> Tuple[list, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    header = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return header, data


def write_trajectory(out: str, traj: Trajectory, cfg: ScenarioConfig) -> None:
    os.makedirs(out, exist_ok=True)
    rows = []
    for i, s in enumerate(traj.snapshots):
        name = f"snap_{i:05d}.csv"
        write_columns(os.path.join(out, name), ("x", "u"), (s.x, s.values))
        rows.append((FMT % s.t, name, FMT % s.x[0], FMT % s.x[-1]))
    with open(os.path.join(out, META), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "filename", "domain_left", "domain_right"))
        w.writerows(rows)
    with open(os.path.join(out, MODEL), "w", encoding="utf-8") as fh:
        fh.write(cfg.to_text())
    with open(os.path.join(out, "plot.py"), "w", encoding="utf-8") as fh:
        fh.write(PLOT_SCRIPT)


def read_trajectory(path: str, cfg: ScenarioConfig = None) -> Tuple[Trajectory, ScenarioConfig]:
    meta = os.path.join(path, META)
    if not os.path.isfile(meta):
        raise ConfigError(f"{path} has no {META}")
    if cfg is None:
        cfg = load_config(os.path.join(path, MODEL))
    m = cfg.model()
    snaps = []
    with open(meta, encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            _, data = read_columns(os.path.join(path, row["filename"]))
            x = data[:, 0]
            n_left = int(round(-x[0] / cfg.h))
            n_right = int(round(x[-1] / cfg.h))
            grid = Grid(cfg.h, n_left, n_right)
            if grid.size != len(x):
                raise ConfigError(f"{row['filename']}: grid does not match spacing h={cfg.h}")
            snaps.append(Field(grid, float(row["t"]), data[:, 1]))
    if not snaps:
        raise ConfigError(f"{meta} lists no snapshots")
    return Trajectory(tuple(snaps), m), cfg


__all__ = ["write_columns", "read_columns", "write_trajectory", "read_trajectory"]
