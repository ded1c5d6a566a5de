"""Run metrics, CSV export and parameter sweeps.

The instantaneous trajectory error is the distance from the GC to the
nearest point of the required course; the "mean" error is its running
(cumulative) mean.  The slip angle is unwrapped over the trace so a
spinning car accumulates full turns instead of wrapping at 180 degrees.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .runner import TRACE_COLUMNS, SimTrace, run
from .scenario import Scenario, apply_overrides, scenario_from_dict

#: Fixed numeric formatting for bit-exact regression of exported traces.
CSV_FORMAT = "%.10g"


@dataclass(frozen=True)
class RunMetrics:
    max_beta_deg: float
    spin: bool
    max_traj_err_inst_m: float
    max_traj_err_mean_m: float
    max_yaw_rate_err_radps: float
    beta_over_dry_limit: bool
    beta_over_icy_limit: bool
    fault: str | None = None

    def as_dict(self) -> dict:
        return {
            "max_beta_deg": self.max_beta_deg,
            "spin": self.spin,
            "max_traj_err_inst_m": self.max_traj_err_inst_m,
            "max_traj_err_mean_m": self.max_traj_err_mean_m,
            "max_yaw_rate_err_radps": self.max_yaw_rate_err_radps,
            "beta_over_dry_limit": self.beta_over_dry_limit,
            "beta_over_icy_limit": self.beta_over_icy_limit,
            "fault": self.fault,
        }


def unwrapped_beta_rad(trace: SimTrace) -> np.ndarray:
    """Slip angle over the run without the +-pi wrap."""
    beta = np.arctan2(trace["vy_mps"], trace["vx_mps"])
    return np.unwrap(beta) if len(beta) else beta


def compute_metrics(trace: SimTrace, scenario: Scenario) -> RunMetrics:
    if len(trace) == 0:
        return RunMetrics(0.0, False, 0.0, 0.0, 0.0, False, False, trace.fault)
    beta = unwrapped_beta_rad(trace)
    max_beta = float(np.max(np.abs(beta)))
    cfg = scenario.iesp_config
    return RunMetrics(
        max_beta_deg=math.degrees(max_beta),
        spin=max_beta > 2.0 * math.pi,
        max_traj_err_inst_m=float(np.max(trace["traj_err_inst_m"])),
        max_traj_err_mean_m=float(np.max(trace["traj_err_mean_m"])),
        max_yaw_rate_err_radps=float(np.max(np.abs(trace["e_psidot_radps"]))),
        beta_over_dry_limit=max_beta > cfg.beta_dry_limit_rad,
        beta_over_icy_limit=max_beta > cfg.beta_icy_limit_rad,
        fault=trace.fault,
    )


def write_trace_csv(trace: SimTrace, path) -> Path:
    """One header row, fixed column order, fixed significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        cols = [trace[name] for name in TRACE_COLUMNS]
        for i in range(len(trace)):
            writer.writerow([CSV_FORMAT % col[i] for col in cols])
    return path


def read_trace_csv(path) -> SimTrace:
    """Re-parse an exported trace (column order must match)."""
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns in {path}")
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(TRACE_COLUMNS)))
    columns = {name: data[:, i].copy() for i, name in enumerate(TRACE_COLUMNS)}
    period = float(columns["time_s"][1] - columns["time_s"][0]) if len(rows) > 1 else 0.0
    return SimTrace(columns, period)


def write_metrics(metrics: RunMetrics, path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        for key, value in metrics.as_dict().items():
            fh.write(f"{key}: {value}\n")
    return path


def export(trace: SimTrace, metrics: RunMetrics, out_dir, plots: bool = False) -> list[Path]:
    """Write trace.csv, metrics.yaml and (optionally) the figure files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        write_trace_csv(trace, out / "trace.csv"),
        write_metrics(metrics, out / "metrics.yaml"),
    ]
    if plots:
        written.extend(write_plots(trace, out))
    return written


def write_plots(trace: SimTrace, out_dir) -> list[Path]:
    """Stacked slip-angle/yaw-rate and error plots as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = trace["time_s"]
    paths = []

    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    axes[0].plot(t, np.degrees(unwrapped_beta_rad(trace)))
    axes[0].set_ylabel("slip angle [deg]")
    axes[0].grid(alpha=0.3)
    axes[1].plot(t, np.degrees(trace["yaw_rate_radps"]))
    axes[1].set_ylabel("yaw rate [deg/s]")
    axes[1].set_xlabel("time [s]")
    axes[1].grid(alpha=0.3)
    fig.tight_layout()
    p = out / "slip_yaw.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    axes[0].plot(t, trace["traj_err_mean_m"])
    axes[0].set_ylabel("mean trajectory error [m]")
    axes[0].grid(alpha=0.3)
    axes[1].plot(t, trace["traj_err_inst_m"])
    axes[1].set_ylabel("instantaneous error [m]")
    axes[1].set_xlabel("time [s]")
    axes[1].grid(alpha=0.3)
    fig.tight_layout()
    p = out / "trajectory_error.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# Parameter sweeps

def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product of {dotted.path: [values]} in declaration order."""
    combos: list[dict] = [{}]
    for key, values in grid.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ValueError(f"grid entry '{key}' must be a non-empty list")
        combos = [dict(c, **{key: v}) for c in combos for v in values]
    return combos


def _run_point(args):
    base_doc, overrides = args
    try:
        scenario = scenario_from_dict(apply_overrides(base_doc, overrides))
        trace = run(scenario)
        return compute_metrics(trace, scenario)
    except Exception as exc:  # individual faults must not kill the sweep
        return RunMetrics(
            float("nan"), False, float("nan"), float("nan"), float("nan"),
            False, False, fault=str(exc),
        )


def sweep(base_doc: dict, grid: dict, jobs: int = 1) -> list[tuple[dict, RunMetrics]]:
    """Run one simulation per grid point; rows are independent and come
    back in grid order regardless of scheduling."""
    points = expand_grid(grid)
    tasks = [(base_doc, p) for p in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    return list(zip(points, results))


def write_sweep_csv(rows: list[tuple[dict, RunMetrics]], path) -> Path:
    """Summary table: one row per grid point, overrides first."""
    path = Path(path)
    keys = list(rows[0][0].keys()) if rows else []
    metric_names = [
        "max_beta_deg", "spin", "max_traj_err_inst_m", "max_traj_err_mean_m",
        "max_yaw_rate_err_radps", "fault",
    ]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys + metric_names)
        for overrides, metrics in rows:
            md = metrics.as_dict()
            writer.writerow(
                [overrides[k] for k in keys]
                + [md[name] if md[name] is not None else "" for name in metric_names]
            )
    return path
