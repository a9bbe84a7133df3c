"""Pure-Python implementations of the scalar hot loops.

Mirrors ``_kernels.pyx`` function for function; selected when the compiled
extension is unavailable or ``GROUPSEL_PURE_PYTHON=1``.

Interval sets are ``(k, 2)`` float arrays of sorted, disjoint ``[lo, hi]``
rows with ``hi = inf`` allowed.
"""

import math

import numpy as np

INF = math.inf
HALF_PI = 0.5 * math.pi
_EMPTY = np.zeros((0, 2))


def _as_array(rows):
    if not rows:
        return _EMPTY.copy()
    return np.array(rows, dtype=float)


def intersect_intervals(a, b):
    """Two-pointer intersection of two sorted disjoint interval sets."""
    return _as_array(_intersect(a, b))


def _intersect(a, b):
    out = []
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        lo = a[i][0] if a[i][0] > b[j][0] else b[j][0]
        hi = a[i][1] if a[i][1] < b[j][1] else b[j][1]
        if hi > lo:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _quadratic_rows(a2, a1, a0):
    if a2 == 0.0:
        if a1 == 0.0:
            return [(0.0, INF)] if a0 >= 0.0 else []
        root = -a0 / a1
        if a1 > 0.0:
            return [(root if root > 0.0 else 0.0, INF)]
        return [(0.0, root)] if root > 0.0 else []
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        return [(0.0, INF)] if a2 > 0.0 else []
    q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
    if q == 0.0:
        r1 = r2 = 0.0
    else:
        r1, r2 = q / a2, a0 / q
        if r1 > r2:
            r1, r2 = r2, r1
    if a2 > 0.0:
        rows = []
        if r1 > 0.0:
            rows.append((0.0, r1))
        rows.append((r2 if r2 > 0.0 else 0.0, INF))
        return rows
    if r2 <= 0.0:
        return []
    return [(r1 if r1 > 0.0 else 0.0, r2)]


def quadratic_nonneg(a2, a1, a0):
    """``{t >= 0 : a2 t^2 + a1 t + a0 >= 0}`` as an interval array."""
    return _as_array(_quadratic_rows(float(a2), float(a1), float(a0)))


def quadratic_region(a2, a1, a0):
    """Intersect the nonnegative level sets of many quadratics.

    Returns ``(region, j)`` where ``j`` is the index of the inequality that
    emptied the region, or -1.
    """
    region = [(0.0, INF)]
    for j in range(len(a2)):
        rows = _quadratic_rows(float(a2[j]), float(a1[j]), float(a0[j]))
        if len(rows) == 1 and rows[0][0] == 0.0 and rows[0][1] == INF:
            continue
        region = _intersect(region, rows)
        if not region:
            return _EMPTY.copy(), j
    return _as_array(region), -1


def fslice_value(x, r, c, t):
    """Constraint value along the F slice at statistic value ``t``."""
    if t == INF:
        g1, g2 = r, 0.0
    else:
        ct = c * t
        g1 = r * math.sqrt(ct / (1.0 + ct))
        g2 = r / math.sqrt(1.0 + ct)
    return (g1 * g1 * x[0] + g1 * g2 * x[1] + g2 * g2 * x[2]
            + g1 * x[3] + g2 * x[4] + x[5])


def _value_theta(x, r, th):
    g1 = r * math.sin(th)
    g2 = r * math.cos(th) if th < HALF_PI else 0.0
    return (g1 * g1 * x[0] + g1 * g2 * x[1] + g2 * g2 * x[2]
            + g1 * x[3] + g2 * x[4] + x[5])


def theta_to_t(th, c):
    if th >= HALF_PI:
        return INF
    tn = math.tan(th)
    return tn * tn / c


def refine_root(x, r, c, lo, hi, rtol=1e-12, maxiter=200):
    """Bisection for a sign change of the F-slice constraint in ``[lo, hi]`` (angles).

    Angle bisection first, then bisection in the statistic scale once the
    bracket is finite.
    """
    flo = _value_theta(x, r, lo) >= 0.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return theta_to_t(mid, c)
        if (_value_theta(x, r, mid) >= 0.0) == flo:
            lo = mid
        else:
            hi = mid
    tlo, thi = theta_to_t(lo, c), theta_to_t(hi, c)
    if thi == INF:
        return theta_to_t(0.5 * (lo + hi), c)
    flo = fslice_value(x, r, c, tlo) >= 0.0
    if (fslice_value(x, r, c, thi) >= 0.0) == flo:
        return 0.5 * (tlo + thi)
    for _ in range(maxiter):
        mid = 0.5 * (tlo + thi)
        if thi - tlo <= rtol * thi or mid <= tlo or mid >= thi:
            break
        if (fslice_value(x, r, c, mid) >= 0.0) == flo:
            tlo = mid
        else:
            thi = mid
    return 0.5 * (tlo + thi)


def _level_set_rows(x, r, c, thetas, values):
    nonneg = values >= 0.0
    rows = []
    start = 0.0 if nonneg[0] else None
    flips = np.flatnonzero(nonneg[1:] != nonneg[:-1])
    for i in flips:
        root = refine_root(x, r, c, thetas[i], thetas[i + 1])
        if nonneg[i + 1]:
            start = root
        else:
            if root > start:
                rows.append((start, root))
            start = None
    if start is not None:
        rows.append((start, INF))
    return rows


def _theta_values(x, r, thetas):
    g1 = r * np.sin(thetas)
    g2 = r * np.cos(thetas)
    g2[thetas >= HALF_PI] = 0.0
    return (g1 * g1 * x[0] + g1 * g2 * x[1] + g2 * g2 * x[2]
            + g1 * x[3] + g2 * x[4] + x[5])


def fslice_nonneg(x, r, c, thetas):
    """Nonnegative level set in ``t`` of one constraint, probing at sorted angles."""
    thetas = np.asarray(thetas, dtype=float)
    x = [float(v) for v in x]
    return _as_array(_level_set_rows(x, float(r), float(c), thetas,
                                     _theta_values(x, r, thetas)))


def fslice_region(X, r, c, grid, cands, offsets):
    """Intersect the F-slice level sets of all constraints.

    ``grid`` is a sorted angle grid shared by all constraints; constraint
    ``j`` adds its own probe angles ``cands[offsets[j]:offsets[j+1]]``.
    Returns ``(region, j)`` like :func:`quadratic_region`.
    """
    X = np.asarray(X, dtype=float)
    grid = np.asarray(grid, dtype=float)
    r = float(r)
    c = float(c)
    region = [(0.0, INF)]
    for j in range(X.shape[0]):
        extra = cands[offsets[j]:offsets[j + 1]]
        thetas = np.union1d(grid, extra) if len(extra) else grid
        x = [float(v) for v in X[j]]
        values = _theta_values(x, r, thetas)
        if np.all(values >= 0.0):
            continue
        rows = _level_set_rows(x, r, c, thetas, values)
        region = _intersect(region, rows)
        if not region:
            return _EMPTY.copy(), j
    return _as_array(region), -1
