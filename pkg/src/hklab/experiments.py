"""Batch sweeps over configuration families, scaling fits and report files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import generators
from .dynamics import simulate
from .energy import energy
from .state import FLOAT, MODES, OpinionState
from .verify import CSV_COLUMNS, diagnostics_rows, format_csv_value, verify_trajectory

log = logging.getLogger(__name__)

FAMILIES = ("circle", "dumbbell", "line", "random")
WORKERS_ENV = "HKLAB_WORKERS"

REPORT_COLUMNS = (
    "family",
    "n",
    "trial",
    "seed",
    "status",
    "freezing_time",
    "cap_exceeded",
    "cap",
    "merge_count",
    "steps",
    "min_slack_rmf",
    "min_slack_spectral",
    "min_slack_gap",
    "min_slack_path",
    "initial_energy",
    "final_energy",
    "violations",
)


@dataclass
class ExperimentSpec:
    family: str
    n_values: list[int]
    params: dict = field(default_factory=dict)
    trials_per_n: int = 1
    seed: int = 0
    mode: str = FLOAT
    cap_multiplier: float = 10.0
    spectral: bool = True
    out_dir: Optional[str] = None
    step_csv: bool = False

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError("n_values must be a non-empty list of positive integers")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.trials_per_n < 1:
            raise ValueError("trials_per_n must be >= 1")
        if not self.cap_multiplier > 0:
            raise ValueError("cap_multiplier must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc)
        outputs = doc.pop("outputs", {}) or {}
        known = {"family", "n_values", "params", "trials_per_n", "seed", "mode", "cap_multiplier", "spectral"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(
            **doc,
            out_dir=outputs.get("dir"),
            step_csv=bool(outputs.get("step_csv", False)),
        )

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n_values": list(self.n_values),
            "params": dict(self.params),
            "trials_per_n": self.trials_per_n,
            "seed": self.seed,
            "mode": self.mode,
            "cap_multiplier": self.cap_multiplier,
            "spectral": self.spectral,
            "outputs": {"dir": self.out_dir, "step_csv": self.step_csv},
        }

    def cap_for(self, n: int) -> int:
        return max(1, math.ceil(self.cap_multiplier * n**4))


def trial_seed(seed: int, n: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, n, trial]).generate_state(1)[0])


def make_config(family: str, n: int, params: dict, seed: int) -> OpinionState:
    if family == "circle":
        if "radius" in params:
            return generators.circle_config(n, params["radius"])
        return generators.circle_config_chord(n, params.get("chord", 0.99))
    if family == "dumbbell":
        return generators.dumbbell_for_size(n, params.get("spacing", 1.0))
    if family == "line":
        return generators.line_config(n, params.get("spacing", 1.0))
    if family == "random":
        return generators.random_config(n, params.get("d", 2), params.get("box_side", 5.0), seed)
    raise ValueError(f"unknown family {family!r}")


def _run_trial(spec: ExperimentSpec, n: int, trial: int) -> tuple[dict, float, Optional[list[dict]]]:
    seed = trial_seed(spec.seed, n, trial)
    row = {"family": spec.family, "n": n, "trial": trial, "seed": seed, "cap": spec.cap_for(n)}
    start = time.perf_counter()
    steps_out = None
    try:
        x0 = make_config(spec.family, n, spec.params, seed)
        tr = simulate(x0, cap=row["cap"], mode=spec.mode, spectral=spec.spectral)
        summary = verify_trajectory(tr, strict=False)
        row.update(
            status="ok" if summary.ok else "violation",
            freezing_time=tr.freezing_time,
            cap_exceeded=tr.cap_exceeded,
            merge_count=summary.merge_count,
            steps=summary.steps,
            initial_energy=float(energy(tr.states[0]).total),
            final_energy=float(energy(tr.states[-1]).total),
            violations=len(summary.violations),
        )
        for name in ("rmf", "spectral", "gap", "path"):
            row[f"min_slack_{name}"] = summary.min_slack[name]
        if spec.step_csv:
            steps_out = diagnostics_rows(tr.diagnostics)
    except Exception as exc:  # a failed trial is a record, the sweep goes on
        log.exception("trial n=%d #%d failed", n, trial)
        row.update(status=f"error: {type(exc).__name__}: {exc}", violations=1)
    return row, time.perf_counter() - start, steps_out


def _run_trial_args(args):
    return _run_trial(*args)


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list[dict]
    wall_clock: list[float]
    fit: Optional[dict] = None

    @property
    def violation_count(self) -> int:
        return sum(int(r.get("violations") or 0) for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "rows": [dict(r, wall_clock=w) for r, w in zip(self.rows, self.wall_clock)],
            "fit": self.fit,
            "violation_count": self.violation_count,
        }

    def to_csv(self) -> str:
        return rows_to_csv(self.rows, REPORT_COLUMNS)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow(["" if r.get(c) is None else format_csv_value(r.get(c)) for c in columns])
    return buf.getvalue()


def worker_count() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> ExperimentReport:
    """Simulate and verify every (n, trial) of ``spec``; write CSV/JSON if an out_dir is set.

    Wall-clock times go to the JSON report only so the CSV is reproducible
    byte for byte.
    """
    workers = worker_count() if workers is None else workers
    jobs = [(spec, n, trial) for n in spec.n_values for trial in range(spec.trials_per_n)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_args, jobs))
    else:
        results = [_run_trial(*job) for job in jobs]
    rows = [r for r, _, _ in results]
    report = ExperimentReport(spec, rows, [w for _, w, _ in results])
    distinct = {r["n"] for r in rows}
    if len(distinct) >= 3:
        try:
            slope, intercept, ci = fit_scaling(rows)
            report.fit = {"slope": slope, "intercept": intercept, "ci": ci}
        except ValueError as exc:
            report.fit = {"error": str(exc)}
    if spec.out_dir:
        write_report(report, Path(spec.out_dir), [s for _, _, s in results])
    return report


def write_report(report: ExperimentReport, out: Path, step_tables: Optional[list] = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, default=float))
    for row, steps in zip(report.rows, step_tables or []):
        if steps is not None:
            name = f"steps_n{row['n']}_trial{row['trial']}.csv"
            (out / name).write_text(rows_to_csv(steps, CSV_COLUMNS))


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """OLS of log y on log x; returns (slope, intercept, 2 * slope standard error)."""
    if len(xs) < 3:
        raise ValueError("need at least 3 points for a scaling fit")
    if any(y <= 0 for y in ys):
        raise ValueError("log-log fit needs positive values")
    res = stats.linregress(np.log(xs), np.log(ys))
    return float(res.slope), float(res.intercept), float(2.0 * res.stderr)


def fit_scaling(rows: Sequence[dict]) -> tuple[float, float, float]:
    """Log-log slope of the median freezing time against n.

    Capped trials count as infinitely slow; a capped median is rejected.
    """
    by_n: dict[int, list[float]] = {}
    for r in rows:
        ft = r.get("freezing_time")
        capped = r.get("cap_exceeded") or ft is None or ft == ""
        by_n.setdefault(int(r["n"]), []).append(math.inf if capped else float(ft))
    if len(by_n) < 3:
        raise ValueError(f"need at least 3 distinct n values, got {len(by_n)}")
    ns = sorted(by_n)
    meds = [median(by_n[n]) for n in ns]
    if any(math.isinf(m) for m in meds):
        raise ValueError("a median freezing time is cap-exceeded")
    return loglog_fit(ns, meds)


def first_step_decrement(x: OpinionState) -> float:
    from .dynamics import hk_step

    return float(energy(x).total - energy(hk_step(x)).total)


def read_report_rows(path: str | os.PathLike) -> list[dict]:
    """Rows from a report.json or report.csv written by run_experiment."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())["rows"]
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["cap_exceeded"] = r.get("cap_exceeded") == "True"
        r["freezing_time"] = int(r["freezing_time"]) if r.get("freezing_time") else None
    return rows
