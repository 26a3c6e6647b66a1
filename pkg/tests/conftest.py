from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from hklab.state import OpinionState

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def exact(rows):
    return OpinionState.from_rows(rows, mode="exact")


def floats(rows):
    return OpinionState.from_rows(rows, mode="float")


# Oracles below use plain Python loops over Fractions; they share no code with hklab.


def oracle_step(points: list[list[Fraction]]) -> list[list[Fraction]]:
    out = []
    for p in points:
        nb = [q for q in points if sum((a - b) ** 2 for a, b in zip(p, q)) <= 1]
        out.append([sum((q[k] for q in nb), Fraction(0)) / len(nb) for k in range(len(p))])
    return out


def oracle_energy(points) -> tuple[Fraction, Fraction]:
    total = active = Fraction(0)
    for p in points:
        for q in points:
            s = sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p, q))
            total += min(s, 1)
            if s <= 1:
                active += s
    return total, active


@st.composite
def small_states(draw, max_n=12, max_d=3, side=4.0):
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(1, max_d))
    vals = draw(
        st.lists(
            st.floats(0.0, side, allow_nan=False, allow_infinity=False),
            min_size=n * d,
            max_size=n * d,
        )
    )
    return OpinionState(np.array(vals, dtype=np.float64).reshape(n, d))


@st.composite
def rational_states(draw, max_n=8, max_d=2, side=4, max_den=8, dyadic=False):
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(1, max_d))
    rows = []
    for _ in range(n):
        row = []
        for _ in range(d):
            q = draw(st.sampled_from([1, 2, 4, 8, 16][: max_den.bit_length()])) if dyadic else draw(st.integers(1, max_den))
            p = draw(st.integers(0, side * q))
            row.append(Fraction(p, q))
        rows.append(row)
    return OpinionState.from_rows(rows, mode="exact")


@pytest.fixture
def path3():
    return exact([0, 1, 2])
