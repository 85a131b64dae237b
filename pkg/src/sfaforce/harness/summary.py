"""Run statistics: steady-state errors, settling times, and summary tables.

Steady-state error is the mean absolute deviation of the true force from the
demand over the final 20% of each step segment; settling time is the first
moment after which the error stays inside the settle band. Summary tables are
written as CSV (or JSON) with deterministic formatting so identical runs are
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..control import read_time_series

__all__ = [
    "RunSummary",
    "SegmentStats",
    "segment_stats",
    "marginal_rows",
    "summarize",
    "write_conditions",
    "read_conditions",
]

STEADY_STATE_WINDOW = 0.2

CONDITION_COLUMNS = [
    "condition_id", "log_file", "frame", "axis", "inflation_pct", "demand_n",
    "segment_start_s", "segment_end_s", "settle_band_n",
]

MU = "mu"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


@dataclass
class RunSummary:
    """Per-condition statistics table plus marginal rows, one per scenario run."""

    kind: str
    seed: int
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    rng_name: str = "numpy-PCG64"

    def header_comment(self) -> str:
        return (f"# sfaforce summary schema_version=1 kind={self.kind} "
                f"seed={self.seed} rng={self.rng_name}")

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.header_comment() + "\n")
            handle.write(",".join(self.columns) + "\n")
            for row in self.rows:
                handle.write(",".join(_fmt(v) for v in row) + "\n")

    def to_json(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "schema_version": 1,
            "kind": self.kind,
            "seed": self.seed,
            "rng": self.rng_name,
            "columns": self.columns,
            "rows": [[v if isinstance(v, str) else float(v) for v in row] for row in self.rows],
        }
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")

    def write(self, directory, fmt: str = "csv") -> Path:
        directory = Path(directory)
        out = directory / ("summary.json" if fmt == "json" else "summary.csv")
        if fmt == "json":
            self.to_json(out)
        else:
            self.to_csv(out)
        return out

    def cells(self, **filters) -> list[dict]:
        """Rows as dicts, filtered by column values in their CSV form.

        Filter values are matched against the formatted cell text, so
        ``inflation_pct="50"`` matches a stored 50.0.
        """
        out = []
        for row in self.rows:
            record = {c: _fmt(v) for c, v in zip(self.columns, row)}
            if all(record.get(k) == _fmt(v) for k, v in filters.items()):
                out.append(record)
        return out

    def value(self, column: str, **filters) -> float:
        matches = self.cells(**filters)
        if len(matches) != 1:
            raise KeyError(f"expected one row for {filters}, found {len(matches)}")
        return float(matches[0][column])


@dataclass(frozen=True)
class SegmentStats:
    """Error statistics of one demand-hold segment."""

    mean_abs_err: float
    err_std: float
    steady_state_err: float
    settling_time: float


def segment_stats(t: np.ndarray, force: np.ndarray, demand: float,
                  settle_band: float = 0.1) -> SegmentStats:
    """Stats for a single force trace against a constant demand.

    mean_abs_err and err_std cover the whole segment; steady_state_err is the
    mean absolute error over the trailing window. Settling time is measured
    from the segment start and is NaN when the trace never stays in the band.
    """
    if t.size == 0:
        raise ValueError("empty segment")
    err = force - demand
    abs_err = np.abs(err)
    window = max(1, int(np.ceil(t.size * STEADY_STATE_WINDOW)))
    ss = float(abs_err[-window:].mean())
    outside = abs_err > settle_band
    if not outside.any():
        settle = 0.0
    elif outside[-1]:
        settle = float("nan")
    else:
        last_bad = int(np.max(np.nonzero(outside)))
        settle = float(t[last_bad + 1] - t[0])
    return SegmentStats(
        mean_abs_err=float(abs_err.mean()),
        err_std=float(abs_err.std(ddof=1)) if abs_err.size > 1 else 0.0,
        steady_state_err=ss,
        settling_time=settle,
    )


def marginal_rows(rows: list[list], key_columns: list[int], value_columns: list[int],
                  total_label_columns: list[int] | None = None) -> list[list]:
    """Marginal mean rows over each key column plus the grand mean.

    For every key column, rows sharing the other keys are averaged with that
    key set to "mu". With equal per-cell sample counts the marginal means
    equal the mean of cell means, matching the result tables' mu rows.
    """
    out: list[list] = []
    if not rows:
        return out
    n_cols = len(rows[0])

    def mean_rows(group: list[list]) -> list[float]:
        stacked = np.array([[float(r[c]) for c in value_columns] for r in group])
        return stacked.mean(axis=0).tolist()

    for mu_col in key_columns:
        other = [c for c in key_columns if c != mu_col]
        seen: dict[tuple, list[list]] = {}
        for row in rows:
            key = tuple(row[c] for c in other)
            seen.setdefault(key, []).append(row)
        for key, group in seen.items():
            new = [None] * n_cols
            for c, v in zip(other, key):
                new[c] = v
            new[mu_col] = MU
            for c in (total_label_columns or []):
                if new[c] is None:
                    new[c] = group[0][c]
            for c, v in zip(value_columns, mean_rows(group)):
                new[c] = v
            for c in range(n_cols):
                if new[c] is None:
                    new[c] = MU
            out.append(new)
    grand = [None] * n_cols
    for c in key_columns:
        grand[c] = MU
    for c in (total_label_columns or []):
        grand[c] = rows[0][c]
    for c, v in zip(value_columns, np.array(
            [[float(r[c]) for c in value_columns] for r in rows]).mean(axis=0).tolist()):
        grand[c] = v
    for c in range(n_cols):
        if grand[c] is None:
            grand[c] = MU
    out.append(grand)
    return out


def write_conditions(path, records: list[dict]) -> None:
    """Write the per-condition index that pairs each log with its demand."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(CONDITION_COLUMNS) + "\n")
        for rec in records:
            handle.write(",".join(_fmt(rec[c]) for c in CONDITION_COLUMNS) + "\n")


def read_conditions(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0].split(",") != CONDITION_COLUMNS:
        raise ValueError(f"{path} does not match the conditions schema")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        rec = dict(zip(CONDITION_COLUMNS, parts))
        for key in ("inflation_pct", "demand_n", "segment_start_s", "segment_end_s",
                    "settle_band_n"):
            rec[key] = float(rec[key])
        out.append(rec)
    return out


_STEP_COLUMNS_SFA = ["inflation_pct", "demand_n", "mean_abs_err_n", "err_std_n",
                     "steady_state_err_n", "settling_time_s"]
_STEP_COLUMNS_SEE = ["axis"] + _STEP_COLUMNS_SFA


def summarize_step_records(kind: str, seed: int, records: list[dict],
                           traces: dict[str, tuple[np.ndarray, np.ndarray]]) -> RunSummary:
    """Build the step-scenario summary from condition records and force traces.

    ``traces`` maps condition_id to (t, force) arrays in the demand's frame.
    """
    see = any(r["frame"] == "cartesian" for r in records)
    columns = _STEP_COLUMNS_SEE if see else _STEP_COLUMNS_SFA
    rows = []
    for rec in records:
        t, force = traces[rec["condition_id"]]
        stats = segment_stats(t, force, rec["demand_n"], rec["settle_band_n"])
        row = [rec["inflation_pct"], rec["demand_n"], stats.mean_abs_err,
               stats.err_std, stats.steady_state_err, stats.settling_time]
        if see:
            row = [rec["axis"]] + row
        rows.append(row)
    summary = RunSummary(kind=kind, seed=seed, columns=columns)
    if see:
        value_cols = [3, 4, 5, 6]
        for axis in ("x", "y", "z"):
            axis_rows = [r for r in rows if r[0] == axis]
            if not axis_rows:
                continue
            summary.rows.extend(axis_rows)
            summary.rows.extend(marginal_rows(axis_rows, key_columns=[1, 2],
                                              value_columns=value_cols,
                                              total_label_columns=[0]))
    else:
        summary.rows.extend(rows)
        summary.rows.extend(marginal_rows(rows, key_columns=[0, 1],
                                          value_columns=[2, 3, 4, 5]))
    return summary


def summarize(log_dir, kind: str = "steps", seed: int = 0) -> RunSummary:
    """Rebuild a step-scenario summary from logs on disk.

    ``log_dir`` must contain a conditions.csv index plus the referenced
    time-series logs. Values may differ from the run-time summary in the last
    digits because logs store 9 significant digits.
    """
    log_dir = Path(log_dir)
    conditions_path = log_dir / "conditions.csv"
    if not conditions_path.exists():
        raise FileNotFoundError(f"no conditions.csv in {log_dir}")
    resolved_path = log_dir / "resolved_config.yaml"
    if resolved_path.exists():
        import yaml

        with open(resolved_path, "r", encoding="utf-8") as handle:
            resolved = yaml.safe_load(handle) or {}
        kind = resolved.get("kind", kind)
        seed = resolved.get("seed", seed)
    records = read_conditions(conditions_path)
    if not records:
        raise ValueError(f"{conditions_path} lists no conditions")
    traces = {}
    for rec in records:
        log_path = log_dir / rec["log_file"]
        data = read_time_series(log_path)
        if data["t"].size == 0:
            raise ValueError(f"log {log_path} is empty")
        mask = data["act_index"] == 0.0
        t = data["t"][mask]
        if rec["frame"] == "cartesian":
            column = {"x": "fx_true", "y": "fy_true", "z": "fz_true"}[rec["axis"]]
            force = data[column][mask]
        else:
            force = data["f_true_act"][mask]
        keep = (t >= rec["segment_start_s"]) & (t <= rec["segment_end_s"])
        if not keep.any():
            raise ValueError(f"log {log_path} has no samples inside its segment")
        traces[rec["condition_id"]] = (t[keep], force[keep])
    return summarize_step_records(kind, seed, records, traces)
