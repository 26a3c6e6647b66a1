"""Random-walk matrices of the communication graph and their spectra.

The contraction factor ``lambda_t`` is read off the symmetric matrix
D^{-1/2} A D^{-1/2}, which is similar to the walk matrix D^{-1} A and so has
the same (real) spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .dynamics import CommGraph
from .energy import EnergyReport, SlackRecord, energy, tol_check
from .state import OpinionState

UNIT_TOL = 1e-8
GAP_TOL = 1e-9


class SpectrumError(ArithmeticError):
    """The eigensolver returned something impossible for a walk matrix."""


def transition_matrix(g: CommGraph, exact: bool = False) -> np.ndarray:
    """Row-stochastic D^{-1} A; Fraction entries when ``exact``."""
    if exact:
        P = np.empty(g.adjacency.shape, dtype=object)
        for i in range(g.n):
            deg = int(g.degrees[i])
            for j in range(g.n):
                P[i, j] = Fraction(int(g.adjacency[i, j]), deg)
        return P
    return g.adjacency / g.degrees[:, None].astype(np.float64)


def symmetrized_matrix(g: CommGraph) -> np.ndarray:
    inv_sqrt = 1.0 / np.sqrt(g.degrees.astype(np.float64))
    B = g.adjacency * np.outer(inv_sqrt, inv_sqrt)
    # outer() is symmetric up to rounding of the product order; force it.
    return np.triu(B) + np.triu(B, 1).T


def spectrum(g: CommGraph) -> np.ndarray:
    """Ascending eigenvalues of the symmetrized walk matrix."""
    return np.linalg.eigvalsh(symmetrized_matrix(g))


def diameter(g: CommGraph) -> int:
    """Largest eccentricity over all vertices, each measured inside its component."""
    if g.n == 1:
        return 0
    dist = shortest_path(csr_matrix(g.adjacency), method="D", directed=False, unweighted=True)
    finite = dist[np.isfinite(dist)]
    return int(finite.max())


def _lambda_from_spectrum(eigs: np.ndarray, n_components: int) -> tuple[float, float]:
    """Return (lambda_t, signed eigenvalue attaining it) with unit eigenvalues removed."""
    if eigs.size and np.max(np.abs(eigs)) > 1 + UNIT_TOL:
        raise SpectrumError(f"eigenvalue of magnitude {np.max(np.abs(eigs))} exceeds 1")
    top = eigs[eigs.size - n_components:]
    if np.any(np.abs(top - 1.0) > UNIT_TOL):
        raise SpectrumError(f"expected {n_components} unit eigenvalues, top of spectrum is {top}")
    rest = eigs[: eigs.size - n_components]
    if rest.size == 0:
        return 0.0, 0.0
    k = int(np.argmax(np.abs(rest)))
    return float(abs(rest[k])), float(rest[k])


def lambda_t(g: CommGraph) -> float:
    """max |mu| over eigenvalues mu of D^{-1}A other than the unit eigenvalues.

    One unit eigenvalue is removed per connected component.
    """
    return _lambda_from_spectrum(spectrum(g), len(g.components))[0]


def unit_multiplicity(eigs: np.ndarray) -> int:
    return int(np.count_nonzero(np.abs(eigs - 1.0) <= UNIT_TOL))


def exact_det(M: np.ndarray) -> Fraction:
    """Determinant of a square matrix of Fractions by Gaussian elimination."""
    a = [[Fraction(v) for v in row] for row in M]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        p = a[col][col]
        det *= p
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f:
                row_r, row_c = a[r], a[col]
                for c in range(col, n):
                    row_r[c] -= f * row_c[c]
    return det


def snap_rational_eigenvalue(g: CommGraph, approx: float, max_denominator: int = 1000) -> Optional[Fraction]:
    """Exact rational eigenvalue of D^{-1}A near ``approx``, if there is one.

    A candidate p/q is accepted only when det(P - (p/q) I) vanishes exactly.
    """
    q = Fraction(approx).limit_denominator(max_denominator)
    if abs(float(q) - approx) > 1e-9:
        return None
    P = transition_matrix(g, exact=True)
    for i in range(g.n):
        P[i, i] -= q
    return q if exact_det(P) == 0 else None


@dataclass(frozen=True)
class SpectralReport:
    """lambda_t, the graph diameter, and the right-hand side 1 - 1/(n^2 diam).

    ``lambda_t`` is a Fraction when it was certified exactly; ``gap_bound`` is
    None when every component is a single vertex.
    """

    lambda_t: Real
    diameter: int
    gap_bound: Optional[Real]
    eigenvalues: np.ndarray
    n_components: int


def spectral_report(g: CommGraph, exact: bool = False) -> SpectralReport:
    eigs = spectrum(g)
    lam, signed = _lambda_from_spectrum(eigs, len(g.components))
    if exact:
        snapped = snap_rational_eigenvalue(g, signed) if lam > 0 else Fraction(0)
        if snapped is not None:
            lam = abs(snapped)
    diam = diameter(g)
    if diam == 0:
        gap = None
    elif exact:
        gap = 1 - Fraction(1, g.n * g.n * diam)
    else:
        gap = 1.0 - 1.0 / (g.n * g.n * diam)
    return SpectralReport(lam, diam, gap, eigs, len(g.components))


def check_spectral_decrement(
    x: OpinionState,
    x_next: OpinionState,
    report: SpectralReport,
    e: Optional[EnergyReport] = None,
    e_next: Optional[EnergyReport] = None,
) -> SlackRecord:
    """E(x) - E(x_next) >= (1 - lambda_t^2) E_active(x)."""
    e = energy(x) if e is None else e
    e_next = energy(x_next) if e_next is None else e_next
    decrement = e.total - e_next.total
    lam = report.lambda_t
    if isinstance(decrement, Fraction) and not isinstance(lam, Fraction):
        decrement = float(decrement)
        bound = (1.0 - lam * lam) * float(e.active)
    else:
        bound = (1 - lam * lam) * e.active
    return SlackRecord(decrement, bound, decrement - bound, tol_check(e.total))


def check_gap_bound(report: SpectralReport) -> SlackRecord:
    """lambda_t <= 1 - 1/(n^2 diam); skipped when the diameter is 0."""
    if report.gap_bound is None:
        return SlackRecord.skip()
    lam, gap = report.lambda_t, report.gap_bound
    if isinstance(gap, Fraction) and not isinstance(lam, Fraction):
        gap = float(gap)
    return SlackRecord(gap, lam, gap - lam, GAP_TOL)
