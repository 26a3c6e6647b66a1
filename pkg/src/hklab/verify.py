"""Per-step inequality checks, trajectory summaries and the exact replay oracle."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Optional

import numpy as np

from .dynamics import (
    CommGraph,
    DenominatorExplosion,
    Trajectory,
    build_graph,
    coincidence,
    detect_merges,
    simulate,
)
from .energy import SlackRecord, check_rmf_decrement, energy, tol_check
from .spectral import (
    check_gap_bound,
    check_spectral_decrement,
    diameter,
    spectral_report,
    unit_multiplicity,
)
from .state import EXACT, OpinionState

CSV_COLUMNS = (
    "t",
    "energy_total",
    "energy_active",
    "lambda_t",
    "diameter",
    "decrement",
    "slack_rmf",
    "slack_spectral",
    "slack_gap",
    "slack_path",
    "merged",
)

CHECKS = ("rmf", "spectral", "gap", "path", "composed", "monotone", "unit_multiplicity")
SLACK_NAMES = ("rmf", "spectral", "gap", "path")

NAN = float("nan")


class VerificationError(AssertionError):
    """A checked inequality failed; ``bundle`` holds everything needed to replay it."""

    def __init__(self, check: str, step: int, bundle: dict):
        super().__init__(f"{check} check violated at step {step}")
        self.check = check
        self.step = step
        self.bundle = bundle


@dataclass
class StepDiagnostics:
    """Energies, spectral data and slacks for the transition t -> t+1.

    A slack is ``lhs - bound``; NaN marks a check that was skipped (spectral
    quantities with spectral checks disabled, gap bound at diameter 0, the
    composed bound on merging steps or at diameter < 2).
    """

    t: int
    n: int
    energy_total: Real
    energy_active: Real
    lambda_t: Real
    diameter: int
    decrement: Real
    rmf_bound: Real
    spectral_bound: Real
    gap_rhs: Real
    slack_rmf: Real
    slack_spectral: Real
    slack_gap: Real
    slack_path: Real
    slack_composed: Real
    merged: bool
    tol: float
    n_components: int
    violations: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)

    def row(self) -> dict:
        """Values for the diagnostics CSV columns."""
        return {c: getattr(self, c) for c in CSV_COLUMNS}

    def to_dict(self) -> dict:
        doc = {}
        for k, v in asdict(self).items():
            if isinstance(v, Fraction):
                v = str(v)
            doc[k] = list(v) if isinstance(v, tuple) else v
        return doc


def path_bound(diam: int) -> Fraction:
    """Lower bound floor(diam/2)/2 on the active energy of a state with this graph diameter."""
    return Fraction(diam // 2, 2)


def diagnose_step(
    x: OpinionState,
    x_next: OpinionState,
    t: int = 0,
    graph: Optional[CommGraph] = None,
    merged: Optional[bool] = None,
    spectral: bool = True,
) -> StepDiagnostics:
    """Compute every per-step quantity and slack without raising."""
    g = build_graph(x) if graph is None else graph
    merged = detect_merges(x, x_next) if merged is None else merged
    e, e_next = energy(x), energy(x_next)
    decrement = e.total - e_next.total
    tol = tol_check(e.total)
    n = x.n
    violations = []

    rmf = check_rmf_decrement(x, x_next, e, e_next)
    if spectral:
        rep = spectral_report(g, exact=x.exact)
        spec = check_spectral_decrement(x, x_next, rep, e, e_next)
        gap = check_gap_bound(rep)
        diam = rep.diameter
        lam = rep.lambda_t
        if unit_multiplicity(rep.eigenvalues) != rep.n_components:
            violations.append("unit_multiplicity")
    else:
        diam = diameter(g)
        lam = NAN
        spec = gap = SlackRecord.skip()

    pb = path_bound(diam)
    slack_path = e.active - pb if x.exact else e.active - float(pb)

    if not merged and diam >= 2:
        composed_bound = e.active / (n * n * diam)
        slack_composed = decrement - composed_bound
    else:
        composed_bound = slack_composed = NAN

    if rmf.violated:
        violations.append("rmf")
    if spec.violated:
        violations.append("spectral")
    if gap.violated:
        violations.append("gap")
    if slack_path < -tol:
        violations.append("path")
    if not math.isnan(float(slack_composed)) and slack_composed < -tol:
        violations.append("composed")
    if decrement < -tol:
        violations.append("monotone")

    return StepDiagnostics(
        t=t,
        n=n,
        energy_total=e.total,
        energy_active=e.active,
        lambda_t=lam,
        diameter=diam,
        decrement=decrement,
        rmf_bound=rmf.bound,
        spectral_bound=spec.bound,
        gap_rhs=gap.lhs,
        slack_rmf=rmf.slack,
        slack_spectral=spec.slack,
        slack_gap=gap.slack,
        slack_path=slack_path,
        slack_composed=slack_composed,
        merged=merged,
        tol=tol,
        n_components=len(g.components),
        violations=tuple(violations),
        extras={"composed_bound": composed_bound},
    )


def violation_bundle(check: str, diag: StepDiagnostics, x: OpinionState, x_next: OpinionState) -> dict:
    g = build_graph(x)
    return {
        "check": check,
        "step": diag.t,
        "mode": x.mode,
        "state": x.to_dict(),
        "next_state": x_next.to_dict(),
        "graph": {
            "adjacency": [np.flatnonzero(row).tolist() for row in g.adjacency],
            "degrees": g.degrees.tolist(),
            "components": [list(c) for c in g.components],
        },
        "diagnostics": diag.to_dict(),
    }


def verify_step(x: OpinionState, x_next: OpinionState, t: int = 0, spectral: bool = True) -> StepDiagnostics:
    """diagnose_step, raising VerificationError on the first failed check."""
    diag = diagnose_step(x, x_next, t=t, spectral=spectral)
    if diag.violations:
        raise VerificationError(diag.violations[0], t, violation_bundle(diag.violations[0], diag, x, x_next))
    return diag


@dataclass
class VerificationSummary:
    n: int
    steps: int
    freezing_time: Optional[int]
    merge_count: int
    min_slack: dict
    mean_slack: dict
    small_decrement_steps: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "steps": self.steps,
            "freezing_time": self.freezing_time if self.freezing_time is not None else "cap-exceeded",
            "merge_count": self.merge_count,
            "min_slack": self.min_slack,
            "mean_slack": self.mean_slack,
            "small_decrement_steps": self.small_decrement_steps,
            "ok": self.ok,
            "violations": self.violations,
        }


def _slack_stats(diags: list[StepDiagnostics]) -> tuple[dict, dict]:
    mins, means = {}, {}
    for name in SLACK_NAMES + ("composed",):
        vals = [float(getattr(d, f"slack_{name}")) for d in diags]
        vals = [v for v in vals if not math.isnan(v)]
        mins[name] = min(vals) if vals else None
        means[name] = sum(vals) / len(vals) if vals else None
    return mins, means


def verify_trajectory(tr: Trajectory, strict: bool = True) -> VerificationSummary:
    """Check every step of ``tr`` plus the trajectory-level invariants.

    Trajectory-level checks: at most n-1 merging times, energy never
    increases, and agents that coincide keep coinciding. With ``strict`` the
    first violation is raised as VerificationError; otherwise all violations
    are collected into the summary.
    """
    n = tr.n
    diags = tr.diagnostics
    if len(diags) != len(tr.states) - 1:
        diags = [
            diagnose_step(tr.states[t], tr.states[t + 1], t=t, spectral=tr.spectral)
            for t in range(len(tr.states) - 1)
        ]
    found: list[dict] = []

    def fail(check: str, step: int, bundle: dict) -> None:
        if strict:
            raise VerificationError(check, step, bundle)
        found.append(bundle)

    prev = coincidence(tr.states[0])
    for t, diag in enumerate(diags):
        x, x_next = tr.states[t], tr.states[t + 1]
        for check in diag.violations:
            fail(check, t, violation_bundle(check, diag, x, x_next))
        cur = coincidence(x_next)
        if np.any(prev & ~cur):
            fail("irreversible_merge", t, {"check": "irreversible_merge", "step": t, "state": x.to_dict()})
        prev = cur
    if len(tr.merge_times) > n - 1:
        fail("merge_count", len(tr.states) - 1, {"check": "merge_count", "merge_times": list(tr.merge_times)})

    mins, means = _slack_stats(diags)
    small = sum(1 for d in diags if d.decrement < Fraction(1, n * n))
    return VerificationSummary(
        n=n,
        steps=len(diags),
        freezing_time=tr.freezing_time,
        merge_count=len(tr.merge_times),
        min_slack=mins,
        mean_slack=means,
        small_decrement_steps=small,
        violations=found,
    )


MAX_REPLAY_AGENTS = 25
MAX_REPLAY_STEPS = 100
DEFAULT_BIT_LIMIT = 10**6


def rational_replay(
    x0: OpinionState, steps: int, bit_limit: int = DEFAULT_BIT_LIMIT, spectral: bool = True
) -> Trajectory:
    """Replay the dynamics in exact rational arithmetic for up to ``steps`` transitions.

    Float inputs are taken at their exact binary value. Raises
    DenominatorExplosion when a coordinate exceeds ``bit_limit`` bits.
    """
    if x0.n > MAX_REPLAY_AGENTS:
        raise ValueError(f"exact replay supports n <= {MAX_REPLAY_AGENTS}, got {x0.n}")
    if not 1 <= steps <= MAX_REPLAY_STEPS:
        raise ValueError(f"exact replay supports 1 <= steps <= {MAX_REPLAY_STEPS}, got {steps}")
    return simulate(x0.as_mode(EXACT), cap=steps, spectral=spectral, bit_limit=bit_limit)


def max_divergence(exact: Trajectory, approx: Trajectory, steps: Optional[int] = None) -> float:
    """Largest per-coordinate gap between matching states of two trajectories.

    The shorter trajectory is extended with its final (frozen) state.
    """
    m = max(len(exact.states), len(approx.states))
    if steps is not None:
        m = min(m, steps + 1)
    worst = 0.0
    for t in range(m):
        a = exact.states[min(t, len(exact.states) - 1)].to_float()
        b = approx.states[min(t, len(approx.states) - 1)].to_float()
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


def _csv_value(v) -> object:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def diagnostics_rows(diags: Iterable[StepDiagnostics]) -> list[dict]:
    return [{k: _csv_value(v) for k, v in d.row().items()} for d in diags]


def format_csv_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


__all__ = [
    "CHECKS",
    "CSV_COLUMNS",
    "DenominatorExplosion",
    "StepDiagnostics",
    "VerificationError",
    "VerificationSummary",
    "diagnose_step",
    "diagnostics_rows",
    "max_divergence",
    "path_bound",
    "rational_replay",
    "verify_step",
    "verify_trajectory",
]
