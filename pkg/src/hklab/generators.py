"""Initial configurations: circle, dumbbell, line and uniform random boxes."""

from __future__ import annotations

import math

import numpy as np

from .state import OpinionState


def _check_spacing(spacing: float) -> None:
    if not 0 < spacing <= 1:
        raise ValueError(f"spacing must lie in (0, 1], got {spacing}")


def circle_config(n: int, radius: float) -> OpinionState:
    """n agents equally spaced on a circle of the given radius in the plane."""
    if n < 3:
        raise ValueError(f"circle needs n >= 3, got {n}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    angles = 2.0 * np.pi * np.arange(n) / n
    coords = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return OpinionState(coords)


def chord_radius(n: int, chord: float) -> float:
    """Radius at which adjacent agents of an n-gon sit ``chord`` apart."""
    if n < 3:
        raise ValueError(f"circle needs n >= 3, got {n}")
    if not 0 < chord <= 1:
        raise ValueError(f"chord must lie in (0, 1], got {chord}")
    return chord / (2.0 * math.sin(math.pi / n))


def circle_config_chord(n: int, chord: float) -> OpinionState:
    return circle_config(n, chord_radius(n, chord))


def dumbbell_config(m: int, k: int, spacing: float = 1.0) -> OpinionState:
    """Two clusters of m co-located agents joined by a chain of k agents.

    Positions: m agents at 0, one agent at each of spacing, ..., k*spacing,
    and m agents at (k+1)*spacing. This is one concrete reading of the
    "dumbbell" family (two heavy ends, a unit-spaced bar between them); the
    block sizes are free so the whole family can be swept.
    """
    if m < 1 or k < 1:
        raise ValueError(f"dumbbell needs m >= 1 and k >= 1, got m={m}, k={k}")
    _check_spacing(spacing)
    pos = [0.0] * m + [j * spacing for j in range(1, k + 1)] + [(k + 1) * spacing] * m
    return OpinionState(np.array(pos, dtype=np.float64)[:, None])


def dumbbell_for_size(n: int, spacing: float = 1.0) -> OpinionState:
    """Dumbbell with clusters of n//4 and a chain holding the remaining agents."""
    m = n // 4
    return dumbbell_config(m, n - 2 * m, spacing)


def line_config(n: int, spacing: float = 1.0) -> OpinionState:
    if n < 1:
        raise ValueError(f"line needs n >= 1, got {n}")
    _check_spacing(spacing)
    return OpinionState((spacing * np.arange(n, dtype=np.float64))[:, None])


def random_config(n: int, d: int, box_side: float, seed: int) -> OpinionState:
    """n i.i.d. uniform points in [0, box_side]^d, reproducible from ``seed``."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not box_side > 0:
        raise ValueError(f"box_side must be positive, got {box_side}")
    rng = np.random.default_rng(seed)
    return OpinionState(rng.uniform(0.0, box_side, size=(n, d)))


def random_rational_config(
    n: int, d: int, box_side: int, max_denominator: int, seed: int, dyadic: bool = False
) -> OpinionState:
    """Exact-mode state with coordinates p/q, 1 <= q <= max_denominator, in [0, box_side].

    With ``dyadic`` the denominators are powers of two, so the state converts
    to float mode without rounding.
    """
    from fractions import Fraction

    rng = np.random.default_rng(seed)
    powers = [2**k for k in range(max_denominator.bit_length()) if 2**k <= max_denominator]
    rows = []
    for _ in range(n):
        row = []
        for _ in range(d):
            if dyadic:
                q = powers[int(rng.integers(0, len(powers)))]
            else:
                q = int(rng.integers(1, max_denominator + 1))
            p = int(rng.integers(0, box_side * q + 1))
            row.append(Fraction(p, q))
        rows.append(row)
    return OpinionState.from_rows(rows, mode="exact")
