"""Truncation regions along one-dimensional slices through a selection event.

Chi slice: ``y(t) = z + t sigma u``; each constraint is a quadratic in ``t``.

F slice: ``y(t) = z + g1(t) v_delta + g2(t) v_2`` with
``g1 = r sqrt(ct / (1 + ct))`` and ``g2 = r / sqrt(1 + ct)``. Substituting
``ct = tan(theta)^2`` turns each constraint into a trigonometric polynomial
in ``theta`` whose zeros are roots of a complex quartic on the unit circle.
The quartic gives candidate roots; sign changes are then bracketed and
refined by bisection on the constraint itself, with a fixed angular grid
as a backstop for anything the polynomial solver misses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .distributions import RegionError
from .intervals import IntervalUnion
from .stepwise import QuadraticInequality, SelectionEvent

COEF_TOL = 1e-12
UNIT_CIRCLE_TOL = 1e-6
ANGLE_PAD = 1e-8
PROBE_DELTA = 1e-7
GRID_SIZE = 512
WIDEN_RTOL = 1e-8


@dataclass(frozen=True)
class ChiSlice:
    """``y(t) = z + t * sigma * u`` with observed ``t = statistic``."""

    u: np.ndarray
    z: np.ndarray
    sigma: float
    statistic: float

    def point(self, t: float) -> np.ndarray:
        return self.z + t * self.sigma * self.u


@dataclass(frozen=True)
class FSlice:
    """``y(t) = z + g1(t) v_delta + g2(t) v2`` with observed ``t = statistic``."""

    v_delta: np.ndarray
    v2: np.ndarray
    r: float
    z: np.ndarray
    c: float
    statistic: float

    def g(self, t: float) -> tuple[float, float]:
        if math.isinf(t):
            return self.r, 0.0
        ct = self.c * t
        return self.r * math.sqrt(ct / (1.0 + ct)), self.r / math.sqrt(1.0 + ct)

    def point(self, t: float) -> np.ndarray:
        g1, g2 = self.g(t)
        return self.z + g1 * self.v_delta + g2 * self.v2


def solve_quadratic_nonneg(a2: float, a1: float, a0: float) -> IntervalUnion:
    """``{t >= 0 : a2 t^2 + a1 t + a0 >= 0}``."""
    return IntervalUnion(kernels.quadratic_nonneg(float(a2), float(a1), float(a0)))


def _stacked(event: SelectionEvent):
    cache = event.__dict__.get("_stacked")
    if cache is None:
        if event.bases:
            Bcat = np.hstack(event.bases)
            widths = np.array([B.shape[1] for B in event.bases])
            starts = np.concatenate([[0], np.cumsum(widths)[:-1]])
        else:
            Bcat, starts = None, None
        pk = event.packed
        scale = np.abs(pk.identity).copy()
        if pk.row.size:
            scale += np.bincount(pk.row, weights=np.abs(pk.weight), minlength=pk.m)
        cache = (Bcat, starts, scale)
        event.__dict__["_stacked"] = cache
    return cache


def bilinear_forms(event: SelectionEvent, V: np.ndarray, pairs) -> dict:
    """Per-inequality ``q(V[:, a], V[:, b])`` for the quadratic part of every constraint."""
    pk = event.packed
    Bcat, starts, _ = _stacked(event)
    gram = V.T @ V
    out = {}
    proj = Bcat.T @ V if Bcat is not None else None
    for a, b in pairs:
        vals = pk.identity * gram[a, b]
        if pk.row.size:
            per_basis = np.add.reduceat(proj[:, a] * proj[:, b], starts)
            vals = vals + np.bincount(pk.row, weights=pk.weight * per_basis[pk.basis],
                                      minlength=pk.m)
        out[(a, b)] = vals
    return out


def _linear(event, v):
    pk = event.packed
    if pk.linear is None:
        return np.zeros(pk.m)
    return pk.linear @ v


def chi_slice_coefficients(event: SelectionEvent, sl: ChiSlice):
    """Quadratic coefficients ``(a2, a1, a0)`` of every constraint along the slice."""
    V = np.column_stack([sl.u, sl.z])
    f = bilinear_forms(event, V, [(0, 0), (0, 1), (1, 1)])
    s = sl.sigma
    a2 = s * s * f[(0, 0)]
    a1 = 2.0 * s * f[(0, 1)] + s * _linear(event, sl.u)
    a0 = f[(1, 1)] + _linear(event, sl.z) + event.packed.offset
    return a2, a1, a0


def _clean_chi(event, sl, a2, a1, a0):
    _, _, scale = _stacked(event)
    zn = float(np.linalg.norm(sl.z))
    s = sl.sigma
    a2 = np.where(np.abs(a2) <= COEF_TOL * s * s * scale, 0.0, a2)
    a1 = np.where(np.abs(a1) <= COEF_TOL * 2.0 * s * scale * zn, 0.0, a1)
    a0 = np.where(np.abs(a0) <= COEF_TOL * (scale * zn * zn + np.abs(event.packed.offset)),
                  0.0, a0)
    return a2, a1, a0


def _finish(region: IntervalUnion, bad: int, event, statistic: float) -> IntervalUnion:
    if region.is_empty():
        kind = event.kinds[bad] if 0 <= bad < len(event.kinds) else "?"
        raise RegionError(f"truncation region empty; inequality {bad} ({kind}) is violated")
    try:
        return region.widen_to(statistic, WIDEN_RTOL)
    except ValueError as exc:
        raise RegionError(str(exc)) from None


def chi_slice_region(event: SelectionEvent, sl: ChiSlice) -> IntervalUnion:
    """Set of ``t >= 0`` at which ``z + t sigma u`` satisfies every constraint."""
    if event.n_inequalities == 0:
        return IntervalUnion.full()
    a2, a1, a0 = _clean_chi(event, sl, *chi_slice_coefficients(event, sl))
    rows, bad = kernels.quadratic_region(a2, a1, a0)
    return _finish(IntervalUnion(rows), bad, event, sl.statistic)


def f_slice_coefficients(event: SelectionEvent, sl: FSlice) -> np.ndarray:
    """``(m, 6)`` array of ``x11, x12, x22, x1, x2, x0`` per constraint."""
    V = np.column_stack([sl.v_delta, sl.v2, sl.z])
    f = bilinear_forms(event, V, [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)])
    X = np.column_stack([
        f[(0, 0)],
        2.0 * f[(0, 1)],
        f[(1, 1)],
        2.0 * f[(0, 2)] + _linear(event, sl.v_delta),
        2.0 * f[(1, 2)] + _linear(event, sl.v2),
        f[(2, 2)] + _linear(event, sl.z) + event.packed.offset,
    ])
    _, _, scale = _stacked(event)
    zn = float(np.linalg.norm(sl.z))
    tol = COEF_TOL * np.column_stack([scale, scale, scale, scale * zn, scale * zn,
                                      scale * zn * zn + np.abs(event.packed.offset)])
    X[np.abs(X) <= tol] = 0.0
    return X


def inequality_f_coefficients(q: QuadraticInequality, sl: FSlice) -> np.ndarray:
    """The six slice scalars for a single inequality."""
    def form(a, b):
        total = q.identity * float(a @ b)
        for w, B in q.terms:
            B = getattr(B, "vectors", B)
            total += w * float((B.T @ a) @ (B.T @ b))
        return total

    lin = (lambda v: float(q.linear @ v)) if q.linear is not None else (lambda v: 0.0)
    vd, v2, z = sl.v_delta, sl.v2, sl.z
    return np.array([
        form(vd, vd), 2.0 * form(vd, v2), form(v2, v2),
        2.0 * form(vd, z) + lin(vd), 2.0 * form(v2, z) + lin(v2),
        form(z, z) + lin(z) + q.offset,
    ])


def f_slice_constraint(q: QuadraticInequality, sl: FSlice, t: float) -> float:
    """Value of one constraint at the F-slice point with statistic ``t``."""
    x = inequality_f_coefficients(q, sl)
    return float(kernels.fslice_value(x, sl.r, sl.c, float(t)))


def quartic_coefficients(X: np.ndarray, r: float) -> np.ndarray:
    """``(m, 5)`` complex coefficients (highest degree first) of ``z^2 p(z)``."""
    X = np.atleast_2d(X)
    x11, x12, x22, x1, x2, x0 = X.T
    q = 0.25 * r * r
    h = 0.5 * r
    return np.column_stack([
        q * (x22 - x11 - 1j * x12),
        h * (x2 - 1j * x1),
        2.0 * q * (x11 + x22) + x0,
        h * (x2 + 1j * x1),
        q * (x22 - x11 + 1j * x12),
    ])


def quartic_roots(C: np.ndarray) -> list[np.ndarray]:
    """Roots of each row polynomial; companion eigenvalues, batched when degree 4."""
    m = C.shape[0]
    out: list[np.ndarray] = [np.zeros(0, dtype=complex)] * m
    mag = np.abs(C).max(axis=1)
    full = np.abs(C[:, 0]) > 1e-14 * mag
    if np.any(full):
        lead = C[full, 0][:, None]
        comp = np.zeros((int(full.sum()), 4, 4), dtype=complex)
        comp[:, 0, :] = -C[full, 1:] / lead
        comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
        eig = np.linalg.eigvals(comp)
        for i, j in enumerate(np.flatnonzero(full)):
            out[j] = eig[i]
    for j in np.flatnonzero(~full):
        if mag[j] > 0:
            row = C[j].copy()
            row[np.abs(row) <= 1e-14 * mag[j]] = 0.0
            out[j] = np.roots(row)
    return out


def candidate_angles(roots: np.ndarray) -> np.ndarray:
    """Angles in ``[0, pi/2]`` of roots lying on the unit circle."""
    if roots.size == 0:
        return roots.real
    on = np.abs(np.abs(roots) - 1.0) <= UNIT_CIRCLE_TOL
    th = np.angle(roots[on])
    keep = (th >= -ANGLE_PAD) & (th <= 0.5 * math.pi + ANGLE_PAD)
    return np.clip(np.sort(th[keep]), 0.0, 0.5 * math.pi)


def _probe_angles(cands: np.ndarray) -> np.ndarray:
    if cands.size == 0:
        return cands
    pts = [cands - PROBE_DELTA, cands + PROBE_DELTA, cands]
    if cands.size > 1:
        pts.append(0.5 * (cands[1:] + cands[:-1]))
    out = np.unique(np.clip(np.concatenate(pts), 0.0, 0.5 * math.pi))
    return out


@lru_cache(maxsize=4)
def theta_grid(size: int = GRID_SIZE) -> np.ndarray:
    g = np.linspace(0.0, 0.5 * math.pi, size)
    g.setflags(write=False)
    return g


def _f_probes(X, r):
    roots = quartic_roots(quartic_coefficients(X, r))
    probes = [_probe_angles(candidate_angles(z)) for z in roots]
    offsets = np.zeros(len(probes) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([p.size for p in probes])
    flat = np.concatenate(probes) if probes else np.zeros(0)
    return flat, offsets


def f_level_set(x, r: float, c: float) -> IntervalUnion:
    """``{t >= 0 : I(t) >= 0}`` for one constraint given its six scalars."""
    x = np.asarray(x, dtype=float)
    flat, _ = _f_probes(x[None, :], r)
    thetas = np.union1d(theta_grid(), flat)
    return IntervalUnion(kernels.fslice_nonneg(x, r, c, thetas))


def f_slice_region(event: SelectionEvent, sl: FSlice) -> IntervalUnion:
    """Set of ``t >= 0`` at which the F-slice point satisfies every constraint."""
    if event.n_inequalities == 0:
        return IntervalUnion.full()
    X = f_slice_coefficients(event, sl)
    flat, offsets = _f_probes(X, sl.r)
    rows, bad = kernels.fslice_region(X, sl.r, sl.c, theta_grid(), flat, offsets)
    return _finish(IntervalUnion(rows), bad, event, sl.statistic)
