"""Opinion configurations and their JSON interchange format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

FLOAT = "float"
EXACT = "exact"
MODES = (FLOAT, EXACT)


def _to_exact(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    # Fraction(float) is the exact binary value of the double.
    return Fraction(float(value))


@dataclass(frozen=True, eq=False)
class OpinionState:
    """n agents with d-dimensional opinions; row i is agent i.

    ``coords`` is either a float64 array (float mode) or an object array of
    :class:`fractions.Fraction` (exact mode). The confidence radius is fixed
    to 1, so coordinates are measured in units of it.
    """

    coords: np.ndarray

    def __post_init__(self) -> None:
        c = self.coords
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError(f"coords must be a non-empty n x d matrix, got shape {c.shape}")
        if c.dtype == object:
            if not all(isinstance(v, Fraction) for v in c.flat):
                raise TypeError("exact-mode coordinates must all be Fractions")
        elif c.dtype != np.float64:
            raise TypeError(f"unsupported coordinate dtype {c.dtype}")
        elif not np.all(np.isfinite(c)):
            raise ValueError("coordinates must be finite")
        c.setflags(write=False)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]] | Sequence[Any], mode: str = FLOAT) -> "OpinionState":
        """Build a state from nested rows; a flat sequence means d = 1."""
        if mode not in MODES:
            raise ValueError(f"unknown arithmetic mode {mode!r}")
        rows = list(rows)
        if rows and not isinstance(rows[0], (list, tuple, np.ndarray)):
            rows = [[v] for v in rows]
        if mode == FLOAT:
            arr = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
        else:
            arr = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
            for i, r in enumerate(rows):
                if len(r) != arr.shape[1]:
                    raise ValueError("ragged coordinate rows")
                for k, v in enumerate(r):
                    arr[i, k] = _to_exact(v)
        return cls(arr)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def mode(self) -> str:
        return EXACT if self.coords.dtype == object else FLOAT

    @property
    def exact(self) -> bool:
        return self.coords.dtype == object

    def as_mode(self, mode: str) -> "OpinionState":
        if mode == self.mode:
            return self
        if mode == FLOAT:
            return OpinionState(np.vectorize(float, otypes=[np.float64])(self.coords))
        return OpinionState.from_rows(self.coords.tolist(), mode=EXACT)

    def to_float(self) -> np.ndarray:
        if self.exact:
            return np.vectorize(float, otypes=[np.float64])(self.coords)
        return self.coords

    def equals(self, other: "OpinionState") -> bool:
        return self.coords.shape == other.coords.shape and bool(np.all(self.coords == other.coords))

    def to_dict(self) -> dict:
        if self.exact:
            coords = [[str(v) for v in row] for row in self.coords]
        else:
            coords = self.coords.tolist()
        return {"n": self.n, "d": self.d, "coords": coords}

    @classmethod
    def from_dict(cls, doc: dict, mode: str | None = None) -> "OpinionState":
        """Parse the ``{"n", "d", "coords"}`` document.

        String coordinates such as ``"1/3"`` imply exact mode unless ``mode``
        says otherwise.
        """
        coords = doc["coords"]
        if mode is None:
            mode = EXACT if any(isinstance(v, str) for row in coords for v in row) else FLOAT
        state = cls.from_rows(coords, mode=mode)
        if state.n != doc.get("n", state.n) or state.d != doc.get("d", state.d):
            raise ValueError("n/d fields disagree with coords")
        return state

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, mode: str | None = None) -> "OpinionState":
        return cls.from_dict(json.loads(text), mode=mode)

    def __repr__(self) -> str:
        return f"OpinionState(n={self.n}, d={self.d}, mode={self.mode})"
