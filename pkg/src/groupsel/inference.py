"""Selective significance tests for groups in a forward stepwise model.

Both tests condition on the realized selection event and on every part of
the outcome except a one-dimensional statistic, so the null law of that
statistic is a chi (known sigma) or F (unknown sigma) law truncated to the
slice's truncation region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (RegionError, TruncatedChiSpec, TruncatedFSpec, chi_sf, f_sf,
                            truncated_sf)
from .geometry import ChiSlice, FSlice, chi_slice_region, f_slice_region
from .intervals import IntervalUnion
from .linalg import stack_bases
from .stepwise import SelectionError, StepwiseFit


class DegenerateStatisticError(ValueError):
    """The test statistic is undefined for this fit (e.g. a perfect fit)."""


@dataclass(frozen=True)
class SelectiveTestResult:
    group: int
    kind: str
    statistic: float
    df: tuple[int, ...]
    region: IntervalUnion | None
    pvalue: float
    naive_pvalue: float
    step: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _step_of(fit, g):
    return fit.active.index(g) + 1


def chi_slice_for(fit: StepwiseFit, g: int, sigma: float) -> tuple[ChiSlice, int]:
    """Slice through ``y`` along the fitted direction of group ``g``; returns (slice, dof)."""
    U = fit.fitted_basis(g).vectors
    if U.shape[1] == 0:
        raise DegenerateStatisticError(f"group {g} is collinear with the rest of the model")
    y = fit.y
    R = U @ (U.T @ y)
    norm = float(np.linalg.norm(R))
    T = norm / sigma
    u = R / norm if norm > 0 else np.zeros_like(R)
    return ChiSlice(u=u, z=y - R, sigma=sigma, statistic=T), U.shape[1]


def tchi_test(fit: StepwiseFit, g: int, sigma: float) -> SelectiveTestResult:
    """Truncated chi test of ``H0: P~_g mu = 0`` with known ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    sl, dof = chi_slice_for(fit, g, sigma)
    if sl.statistic == 0.0:
        return SelectiveTestResult(g, "chi", 0.0, (dof,), IntervalUnion.full(), 1.0, 1.0,
                                   _step_of(fit, g))
    region = chi_slice_region(fit.event, sl)
    p = truncated_sf(TruncatedChiSpec(dof, region, sl.statistic))
    return SelectiveTestResult(g, "chi", sl.statistic, (dof,), region, p,
                               chi_sf(dof, sl.statistic), _step_of(fit, g))


def f_slice_for(fit: StepwiseFit, g: int) -> tuple[FSlice, int, int]:
    """Slice for the nested-model F statistic of group ``g``; returns (slice, d1, d2)."""
    Ug = fit.fitted_basis(g)
    if Ug.rank == 0:
        raise DegenerateStatisticError(f"group {g} is collinear with the rest of the model")
    rest = [h for h in fit.active if h != g]
    sub = fit.model_basis(rest)
    full = stack_bases([sub, Ug])
    y = fit.y
    n = y.shape[0]
    d1 = Ug.rank
    d2 = n - full.rank - int(fit.config.intercept)
    if d2 < 1:
        raise DegenerateStatisticError("no residual degrees of freedom")
    z = sub.vectors @ (sub.vectors.T @ y)
    R1 = y - z
    delta = Ug.vectors @ (Ug.vectors.T @ y)
    R2 = R1 - delta
    n2 = float(np.linalg.norm(R2))
    if n2 == 0.0:
        raise DegenerateStatisticError("perfect fit: full-model residual is zero")
    nd = float(np.linalg.norm(delta))
    c = d1 / d2
    T = nd * nd / (c * n2 * n2)
    vd = delta / nd if nd > 0 else np.zeros_like(delta)
    sl = FSlice(v_delta=vd, v2=R2 / n2, r=float(np.linalg.norm(R1)), z=z, c=c, statistic=T)
    return sl, d1, d2


def f_statistic(r1_sq: float, r2_sq: float, c: float) -> float:
    """``(||R1||^2 - ||R2||^2) / (c ||R2||^2)``."""
    return (r1_sq - r2_sq) / (c * r2_sq)


def tf_test(fit: StepwiseFit, g: int) -> SelectiveTestResult:
    """Truncated F test of ``H0: P~_g mu = 0`` with unknown sigma."""
    sl, d1, d2 = f_slice_for(fit, g)
    if sl.statistic == 0.0:
        return SelectiveTestResult(g, "F", 0.0, (d1, d2), IntervalUnion.full(), 1.0, 1.0,
                                   _step_of(fit, g))
    region = f_slice_region(fit.event, sl)
    p = truncated_sf(TruncatedFSpec(d1, d2, region, sl.statistic))
    return SelectiveTestResult(g, "F", sl.statistic, (d1, d2), region, p,
                               f_sf(d1, d2, sl.statistic), _step_of(fit, g))


def test_all_active(fit: StepwiseFit, sigma: float | str | None = None) -> list[SelectiveTestResult]:
    """One result per active group in entry order.

    ``sigma`` as a positive number runs the chi test; ``None`` or
    ``"unknown"`` runs the F test. A group whose test fails carries an
    ``error`` message and a NaN p-value instead of aborting the batch.
    """
    known = sigma is not None and sigma != "unknown"
    out = []
    for g in fit.active:
        try:
            res = tchi_test(fit, g, float(sigma)) if known else tf_test(fit, g)
        except (RegionError, DegenerateStatisticError, SelectionError, ValueError) as exc:
            res = SelectiveTestResult(g, "chi" if known else "F", math.nan, (), None,
                                      math.nan, math.nan, _step_of(fit, g), error=str(exc))
        out.append(res)
    return out


test_all_active.__test__ = False
