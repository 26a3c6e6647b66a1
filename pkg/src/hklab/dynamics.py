"""Communication graphs, the HK update rule, merges, freezing and trajectories."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Optional

import numpy as np

from .state import EXACT, FLOAT, OpinionState

if TYPE_CHECKING:
    from .verify import StepDiagnostics

FREEZE_TOL = 1e-12
MERGE_TOL = 1e-9


def pairwise_sq_dists(x: OpinionState) -> np.ndarray:
    """n x n matrix of squared Euclidean distances (object dtype in exact mode)."""
    c = x.coords
    diff = c[:, None, :] - c[None, :, :]
    return (diff * diff).sum(axis=2)


@dataclass(frozen=True, eq=False)
class CommGraph:
    """Graph on agents with an edge iff opinions are within distance 1.

    Self-loops are always present, so every degree is at least 1.
    """

    adjacency: np.ndarray
    degrees: np.ndarray
    components: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def same_edges(self, other: "CommGraph") -> bool:
        return bool(np.array_equal(self.adjacency, other.adjacency))

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray) -> "CommGraph":
        adj = np.array(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        np.fill_diagonal(adj, True)
        adj.setflags(write=False)
        degrees = adj.sum(axis=1).astype(np.int64)
        degrees.setflags(write=False)
        return cls(adj, degrees, _components(adj))


def _components(adj: np.ndarray) -> tuple[tuple[int, ...], ...]:
    n = adj.shape[0]
    nbrs = [np.flatnonzero(adj[i]) for i in range(n)]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        comp = []
        while queue:
            v = queue.popleft()
            comp.append(v)
            for w in nbrs[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(tuple(sorted(int(v) for v in comp)))
    return tuple(comps)


def build_graph(x: OpinionState) -> CommGraph:
    # Squared distance against 1: no square roots, no tolerance band.
    return CommGraph.from_adjacency(pairwise_sq_dists(x) <= 1)


def hk_step(x: OpinionState, graph: Optional[CommGraph] = None) -> OpinionState:
    """One synchronous HK update: every agent moves to the mean of its neighbourhood."""
    g = build_graph(x) if graph is None else graph
    if x.exact:
        c = x.coords
        out = np.empty_like(c)
        for i in range(x.n):
            nb = np.flatnonzero(g.adjacency[i])
            deg = len(nb)
            for k in range(x.d):
                out[i, k] = sum((c[j, k] for j in nb), Fraction(0)) / deg
        return OpinionState(out)
    out = (g.adjacency.astype(np.float64) @ x.coords) / g.degrees[:, None]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("HK step produced non-finite coordinates")
    return OpinionState(out)


def coincidence(x: OpinionState, tol: float = MERGE_TOL) -> np.ndarray:
    """Boolean n x n matrix: agents i and j hold the same opinion."""
    c = x.coords
    if x.exact:
        return np.all(c[:, None, :] == c[None, :, :], axis=2)
    return np.max(np.abs(c[:, None, :] - c[None, :, :]), axis=2) <= tol


def detect_merges(x: OpinionState, x_next: OpinionState, tol: float = MERGE_TOL) -> bool:
    """True if two agents with different opinions in ``x`` coincide in ``x_next``."""
    return bool(np.any(coincidence(x_next, tol) & ~coincidence(x, tol)))


def is_frozen_transition(
    x: OpinionState, x_next: OpinionState, g: CommGraph, g_next: CommGraph, tol: float = FREEZE_TOL
) -> bool:
    if x.exact:
        return x.equals(x_next)
    return float(np.max(np.abs(x_next.coords - x.coords))) <= tol and g.same_edges(g_next)


class DenominatorExplosion(OverflowError):
    """Exact-mode coordinates outgrew the configured bit budget."""


def _check_bits(x: OpinionState, bit_limit: int, t: int) -> None:
    bits = max(v.numerator.bit_length() + v.denominator.bit_length() for v in x.coords.flat)
    if bits > bit_limit:
        raise DenominatorExplosion(f"step {t}: coordinate needs {bits} bits, limit is {bit_limit}")


def default_cap(n: int) -> int:
    return 10 * n**4


@dataclass
class Trajectory:
    """States x_0..x_T plus one diagnostics record per transition t -> t+1, t < T.

    ``freezing_time`` is None when the cap was reached first.
    """

    states: list[OpinionState]
    diagnostics: list["StepDiagnostics"]
    freezing_time: Optional[int]
    merge_times: list[int]
    cap: int
    mode: str = FLOAT
    spectral: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def d(self) -> int:
        return self.states[0].d

    @property
    def cap_exceeded(self) -> bool:
        return self.freezing_time is None

    @property
    def energies(self) -> list:
        from .energy import energy

        return [energy(s).total for s in self.states]

    def to_dict(self, include_states: bool = False) -> dict:
        from .verify import diagnostics_rows

        doc = {
            "n": self.n,
            "d": self.d,
            "mode": self.mode,
            "cap": self.cap,
            "freezing_time": self.freezing_time if self.freezing_time is not None else "cap-exceeded",
            "merge_times": list(self.merge_times),
            "diagnostics": diagnostics_rows(self.diagnostics),
        }
        if include_states:
            doc["states"] = [s.to_dict()["coords"] for s in self.states]
        return doc


def simulate(
    x0: OpinionState,
    cap: Optional[int] = None,
    mode: Optional[str] = None,
    spectral: bool = True,
    diagnostics: bool = True,
    bit_limit: Optional[int] = None,
) -> Trajectory:
    """Iterate the HK update from ``x0`` until frozen or ``cap`` transitions.

    Freezing (float mode) means max coordinate change <= 1e-12 with an
    unchanged communication graph; in exact mode it is literal equality.
    Reaching the cap is reported through ``freezing_time is None``.
    ``bit_limit`` bounds the numerator+denominator bit size of exact states.
    """
    from .verify import diagnose_step

    if mode is not None:
        x0 = x0.as_mode(mode)
    mode = x0.mode
    cap = default_cap(x0.n) if cap is None else cap
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")

    x, g = x0, build_graph(x0)
    states = [x]
    diags = []
    merges = []
    freezing_time = None
    for t in range(cap + 1):
        x_next = hk_step(x, g)
        if bit_limit is not None and x_next.exact:
            _check_bits(x_next, bit_limit, t + 1)
        g_next = build_graph(x_next)
        if is_frozen_transition(x, x_next, g, g_next):
            freezing_time = t
            break
        if t == cap:
            break
        merged = detect_merges(x, x_next)
        if merged:
            merges.append(t)
        if diagnostics:
            diags.append(diagnose_step(x, x_next, t=t, graph=g, merged=merged, spectral=spectral))
        states.append(x_next)
        x, g = x_next, g_next
    return Trajectory(states, diags, freezing_time, merges, cap, mode=mode, spectral=spectral)


__all__ = [
    "CommGraph",
    "DenominatorExplosion",
    "EXACT",
    "FLOAT",
    "FREEZE_TOL",
    "MERGE_TOL",
    "Trajectory",
    "build_graph",
    "coincidence",
    "default_cap",
    "detect_merges",
    "hk_step",
    "pairwise_sq_dists",
    "simulate",
]
