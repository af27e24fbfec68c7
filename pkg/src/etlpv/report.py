"""Comparison tables and plot-ready data recomputed from shipped run directories.

Every number here is derived from ``trace.csv`` alone, so a report can be
regenerated (and audited) without rerunning a simulation.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .io import read_trace_csv, signal_matrix
from .lpv import heading_and_global_positions

TABLE_HEADER = ("Estimator", "mean ||eta||_2", "Trigger events", "Trigger rate")


@dataclass
class RunSummary:
    run: str
    estimator: str
    steps: int
    agents: int
    mean_formation_error: float
    trigger_events: int
    trigger_rate: float
    trigger_rate_per_agent_step: float


@dataclass
class LoadedRun:
    directory: Path
    meta: dict
    columns: dict

    @property
    def agents(self) -> int:
        return int(self.meta["agents"])

    def signal(self, name: str) -> np.ndarray:
        try:
            return signal_matrix(self.columns, name, self.agents)
        except KeyError:
            raise ConfigError(f"{self.directory}: trace has no `{name}` columns") from None

    def triggers(self) -> np.ndarray:
        try:
            return np.column_stack([self.columns[f"trigger_{i}"] for i in range(self.agents)])
        except KeyError:
            raise ConfigError(f"{self.directory}: trace has no trigger columns") from None

    def time(self) -> np.ndarray:
        if "time" not in self.columns:
            raise ConfigError(f"{self.directory}: trace has no `time` column")
        return self.columns["time"]


def load_run(directory) -> LoadedRun:
    directory = Path(directory)
    path = directory / "trace.csv"
    if not path.is_file():
        raise ConfigError(f"{directory}: no trace.csv (not a completed run directory)")
    meta, cols = read_trace_csv(path)
    for key in ("agents", "estimator", "Ts"):
        if key not in meta:
            raise ConfigError(f"{path}: header lacks `{key}`")
    return LoadedRun(directory, meta, cols)


def summarize(run: LoadedRun) -> RunSummary:
    eta = run.signal("eta")
    trig = run.triggers()
    H, N = trig.shape
    norms = np.linalg.norm(eta.reshape(H, -1), axis=1)
    events = int(trig.sum())
    return RunSummary(run=run.directory.name, estimator=run.meta["estimator"], steps=H, agents=N,
                      mean_formation_error=float(norms.mean()), trigger_events=events,
                      trigger_rate=events / H, trigger_rate_per_agent_step=events / (H * N))


def format_table(rows: list[RunSummary]) -> str:
    cells = [TABLE_HEADER] + [(r.estimator.upper(), f"{r.mean_formation_error:.4f}", str(r.trigger_events),
                               f"{r.trigger_rate:.4f}") for r in rows]
    widths = [max(len(c[j]) for c in cells) for j in range(len(TABLE_HEADER))]
    lines = ["  ".join(c[j].ljust(widths[j]) for j in range(len(c))) for c in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def formation_plot_data(run: LoadedRun) -> np.ndarray:
    """Columns: time, ||eta_k||_2, number of agents triggering at k."""
    eta = run.signal("eta")
    H = eta.shape[0]
    return np.column_stack([run.time(), np.linalg.norm(eta.reshape(H, -1), axis=1), run.triggers().sum(axis=1)])


def xy_plot_data(run: LoadedRun) -> np.ndarray:
    """Columns: time, then (x, y) per agent in the global frame.

    Unicycle runs (header carries ``handle_offset``) are rotated out of the
    body frame with the reconstructed heading; other models report ``y``.
    """
    t = run.time()
    d = run.meta.get("handle_offset")
    out = [t]
    if d is not None:
        x = run.signal("x")
        for i in range(run.agents):
            _, xy = heading_and_global_positions(x[:, i, :], float(d), float(run.meta["Ts"]))
            out += [xy[:, 0], xy[:, 1]]
    else:
        y = run.signal("y")
        for i in range(run.agents):
            out += [y[:, i, c] for c in range(y.shape[2])]
    return np.column_stack(out)


def _write_csv(path: Path, header, data) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])


def build_report(directories, out_dir) -> list[RunSummary]:
    runs = [load_run(d) for d in directories]
    if not runs:
        raise ConfigError("report needs at least one run directory")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [summarize(r) for r in runs]
    labels, seen = [], {}
    for r in runs:
        base = r.meta["estimator"]
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    (out_dir / "table.txt").write_text(format_table(rows))
    (out_dir / "table.json").write_text(json.dumps({"columns": list(TABLE_HEADER),
                                                    "rows": [asdict(r) for r in rows]}, indent=2) + "\n")
    for label, run in zip(labels, runs):
        _write_csv(out_dir / f"{label}_formation.csv", ["time", "eta_norm", "trigger_count"], formation_plot_data(run))
        xy = xy_plot_data(run)
        header = ["time"] + [f"{ax}_{i}" for i in range(run.agents) for ax in ("x", "y")][: xy.shape[1] - 1]
        _write_csv(out_dir / f"{label}_xy.csv", header, xy)
    return rows
