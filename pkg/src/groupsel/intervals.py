"""Finite unions of closed intervals in [0, inf)."""

from __future__ import annotations

import math
import warnings
from typing import Iterable

import numpy as np

from . import kernels

MERGE_TOL = 1e-9
MIN_LENGTH = 1e-12


class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals ``[lo, hi]`` with ``0 <= lo < hi <= inf``.

    Construction normalizes: rows are sorted, overlapping rows and rows whose
    gap is within ``MERGE_TOL`` are merged, and finite rows shorter than
    ``MIN_LENGTH`` are dropped.
    """

    __slots__ = ("_rows",)

    def __init__(self, rows: Iterable = (), normalize: bool = True):
        arr = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows,
                         dtype=float).reshape(-1, 2)
        if normalize:
            arr = _normalize(arr)
        arr.setflags(write=False)
        self._rows = arr

    @classmethod
    def full(cls) -> "IntervalUnion":
        return cls([(0.0, math.inf)])

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls([])

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    def __len__(self):
        return self._rows.shape[0]

    def __iter__(self):
        return (tuple(r) for r in self._rows)

    def __repr__(self):
        body = " U ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in self)
        return f"IntervalUnion({body or 'empty'})"

    def __eq__(self, other):
        if not isinstance(other, IntervalUnion):
            return NotImplemented
        return self._rows.shape == other._rows.shape and np.array_equal(self._rows, other._rows)

    def is_empty(self) -> bool:
        return len(self) == 0

    def is_full(self) -> bool:
        return len(self) == 1 and self._rows[0, 0] == 0.0 and self._rows[0, 1] == math.inf

    @property
    def lower(self) -> float:
        return float(self._rows[0, 0])

    @property
    def upper(self) -> float:
        return float(self._rows[-1, 1])

    def contains(self, t: float, tol: float = 0.0) -> bool:
        r = self._rows
        return bool(np.any((r[:, 0] - tol <= t) & (t <= r[:, 1] + tol)))

    def distance(self, t: float) -> float:
        """Distance from ``t`` to the set (0 inside)."""
        if self.is_empty():
            return math.inf
        lo, hi = self._rows[:, 0], self._rows[:, 1]
        d = np.maximum(lo - t, 0.0) + np.maximum(t - hi, 0.0)
        return float(d.min())

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        return intersect(self, other)

    def widen_to(self, t: float, rtol: float = 1e-8) -> "IntervalUnion":
        """Stretch the nearest endpoint to cover ``t`` if it lies within ``rtol``.

        Root-finding noise can leave the observed statistic a hair outside
        its own region; beyond the tolerance a ``ValueError`` is raised.
        """
        if self.contains(t):
            return self
        tol = rtol * max(1.0, abs(t))
        if self.distance(t) > tol:
            raise ValueError(f"statistic {t!r} lies outside region {self!r}")
        warnings.warn(f"widening truncation region by {self.distance(t):.3g} "
                      "to contain the observed statistic", RuntimeWarning, stacklevel=2)
        rows = self._rows.copy()
        k = int(np.argmin(np.maximum(rows[:, 0] - t, 0.0) + np.maximum(t - rows[:, 1], 0.0)))
        rows[k, 0] = min(rows[k, 0], t)
        rows[k, 1] = max(rows[k, 1], t)
        return IntervalUnion(rows)

    def to_list(self) -> list[list[float | None]]:
        """JSON-friendly rows with ``None`` for an infinite endpoint."""
        return [[float(lo), None if math.isinf(hi) else float(hi)] for lo, hi in self]

    @classmethod
    def from_list(cls, rows) -> "IntervalUnion":
        return cls([(lo, math.inf if hi is None else hi) for lo, hi in rows])


def _normalize(arr: np.ndarray) -> np.ndarray:
    if arr.shape[0] == 0:
        return np.zeros((0, 2))
    if np.any(np.isnan(arr)) or np.any(arr[:, 0] < 0.0) or np.any(arr[:, 1] < arr[:, 0]):
        raise ValueError("interval rows need 0 <= lo <= hi")
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    out = [list(arr[0])]
    for lo, hi in arr[1:]:
        prev = out[-1]
        if lo - prev[1] <= MERGE_TOL * max(1.0, abs(prev[1])):
            prev[1] = max(prev[1], hi)
        else:
            out.append([lo, hi])
    kept = [r for r in out if math.isinf(r[1]) or r[1] - r[0] > MIN_LENGTH]
    return np.array(kept, dtype=float).reshape(-1, 2)


def intersect(a: IntervalUnion, b: IntervalUnion) -> IntervalUnion:
    """Exact set intersection by a linear merge over sorted endpoints."""
    return IntervalUnion(kernels.intersect_intervals(a.rows, b.rows))
