"""Truncated quadratic energy, its active part, and the displacement decrement check."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Optional

import numpy as np

from .dynamics import pairwise_sq_dists
from .state import OpinionState

CHECK_RTOL = 1e-9


def tol_check(total: Real) -> float:
    """Absolute tolerance for inequality slacks at a state of energy ``total``."""
    return CHECK_RTOL * max(1.0, float(total))


@dataclass(frozen=True)
class EnergyReport:
    """E(x), the active part of E(x), and the number of ordered pairs at distance > 1.

    Values are Fractions for exact-mode states and floats otherwise.
    """

    total: Real
    active: Real
    inactive_pair_count: int


@dataclass(frozen=True)
class SlackRecord:
    """``lhs >= bound`` checked as ``slack = lhs - bound >= -tol``."""

    lhs: Real
    bound: Real
    slack: Real
    tol: float
    skipped: bool = False

    @property
    def violated(self) -> bool:
        return not self.skipped and self.slack < -self.tol

    @classmethod
    def skip(cls) -> "SlackRecord":
        nan = float("nan")
        return cls(nan, nan, nan, 0.0, skipped=True)


def _exact_sum(values: np.ndarray) -> Fraction:
    return sum(values.flat, Fraction(0))


def energy(x: OpinionState, sq: Optional[np.ndarray] = None) -> EnergyReport:
    """Sum over all ordered pairs (i, j), i = j included, of min(|x_i - x_j|^2, 1)."""
    sq = pairwise_sq_dists(x) if sq is None else sq
    active = sq <= 1
    inactive = int(x.n * x.n - np.count_nonzero(active))
    if x.exact:
        act = _exact_sum(sq[active])
        return EnergyReport(act + inactive, act, inactive)
    act = float(np.sum(np.where(active, sq, 0.0)))
    total = float(np.sum(np.where(active, sq, 1.0)))
    return EnergyReport(total, act, inactive)


def displacement_sq(x: OpinionState, x_next: OpinionState) -> Real:
    """Squared Frobenius norm of x_next - x."""
    diff = x_next.coords - x.coords
    if x.exact:
        return _exact_sum(diff * diff)
    return float(np.sum(diff * diff))


def check_rmf_decrement(
    x: OpinionState,
    x_next: OpinionState,
    e: Optional[EnergyReport] = None,
    e_next: Optional[EnergyReport] = None,
) -> SlackRecord:
    """E(x) - E(x_next) >= 4 |x_next - x|^2 for one HK step."""
    e = energy(x) if e is None else e
    e_next = energy(x_next) if e_next is None else e_next
    decrement = e.total - e_next.total
    bound = 4 * displacement_sq(x, x_next)
    return SlackRecord(decrement, bound, decrement - bound, tol_check(e.total))
