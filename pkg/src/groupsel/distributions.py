"""Central chi and F tail probabilities and their truncated versions.

The regularized incomplete gamma and beta functions are evaluated in log
space: a power series or a Lentz continued fraction gives whichever tail is
smaller directly, and the other tail is its log-complement. This keeps
relative accuracy far into either tail, where truncation regions for strong
signals usually live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .intervals import IntervalUnion

_EPS = 1e-16
_TINY = 1e-300
_MAXITER = 100_000
LOG_HALF = math.log(0.5)


class RegionError(ValueError):
    """Truncation region is empty or carries no probability mass."""


def log1mexp(d: float) -> float:
    """``log(1 - exp(d))`` for ``d <= 0``."""
    if d >= 0.0:
        return -math.inf
    if d > -math.log(2.0):
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


def _gamma_series(a, x):
    # log P(a, x) by the power series; converges fast for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return math.log(total) - x + a * math.log(x) - math.lgamma(a)


def _gamma_cf(a, x):
    # log Q(a, x) by the modified Lentz continued fraction; x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.log(h) - x + a * math.log(x) - math.lgamma(a)


def log_gammainc(a: float, x: float) -> tuple[float, float]:
    """``(log P(a, x), log Q(a, x))`` for the regularized incomplete gamma."""
    if x <= 0.0:
        return -math.inf, 0.0
    if math.isinf(x):
        return 0.0, -math.inf
    if x < a + 1.0:
        lp = _gamma_series(a, x)
        return lp, log1mexp(lp)
    lq = _gamma_cf(a, x)
    return log1mexp(lq), lq


def _beta_cf(a, b, x):
    # continued fraction for I_x(a, b), NR betacf with modified Lentz
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAXITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _log_beta_lower(a, b, x, y):
    # log I_x(a, b) with y = 1 - x supplied exactly; valid when x < (a+1)/(a+b+2)
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    front = a * math.log(x) + b * math.log(y) - lbeta - math.log(a)
    return front + math.log(_beta_cf(a, b, x))


def log_betainc(a: float, b: float, x: float, y: float | None = None) -> tuple[float, float]:
    """``(log I_x(a, b), log(1 - I_x(a, b)))``; pass ``y = 1 - x`` when known exactly."""
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return -math.inf, 0.0
    if y <= 0.0:
        return 0.0, -math.inf
    if x < (a + 1.0) / (a + b + 2.0):
        lo = _log_beta_lower(a, b, x, y)
        return lo, log1mexp(lo)
    up = _log_beta_lower(b, a, y, x)
    return log1mexp(up), up


def chi_log_tails(r: int, t: float) -> tuple[float, float]:
    """``(log P(chi_r <= t), log P(chi_r > t))``."""
    if t <= 0.0:
        return -math.inf, 0.0
    if math.isinf(t):
        return 0.0, -math.inf
    return log_gammainc(0.5 * r, 0.5 * t * t)


def f_log_tails(d1: int, d2: int, t: float) -> tuple[float, float]:
    """``(log P(F <= t), log P(F > t))`` for ``F ~ F(d1, d2)``."""
    if t <= 0.0:
        return -math.inf, 0.0
    if math.isinf(t):
        return 0.0, -math.inf
    num = d1 * t
    den = num + d2
    return log_betainc(0.5 * d1, 0.5 * d2, num / den, d2 / den)


def _check_positive_int(name, v):
    if int(v) != v or v < 1:
        raise ValueError(f"{name} must be a positive integer, got {v!r}")


def chi_sf(r: int, t: float) -> float:
    """Survival function of the chi distribution with ``r`` degrees of freedom."""
    _check_positive_int("r", r)
    if t < 0:
        raise ValueError("t must be nonnegative")
    return math.exp(chi_log_tails(r, t)[1])


def f_sf(d1: int, d2: int, t: float) -> float:
    """Survival function of the F(d1, d2) distribution."""
    _check_positive_int("d1", d1)
    _check_positive_int("d2", d2)
    if t < 0:
        raise ValueError("t must be nonnegative")
    return math.exp(f_log_tails(d1, d2, t)[1])


@dataclass(frozen=True)
class TruncatedChiSpec:
    """Chi law with ``dof`` degrees of freedom truncated to ``region``."""

    dof: int
    region: IntervalUnion
    statistic: float

    def __post_init__(self):
        _check_positive_int("dof", self.dof)
        _check_membership(self.region, self.statistic)

    def log_tails(self, t):
        return chi_log_tails(self.dof, t)


@dataclass(frozen=True)
class TruncatedFSpec:
    """F(d1, d2) law truncated to ``region``."""

    d1: int
    d2: int
    region: IntervalUnion
    statistic: float

    def __post_init__(self):
        _check_positive_int("d1", self.d1)
        _check_positive_int("d2", self.d2)
        _check_membership(self.region, self.statistic)

    def log_tails(self, t):
        return f_log_tails(self.d1, self.d2, t)


TruncatedSpec = Union[TruncatedChiSpec, TruncatedFSpec]


def _check_membership(region, t):
    if t < 0:
        raise ValueError("statistic must be nonnegative")
    if region.is_empty():
        raise RegionError("truncation region is empty")
    if not region.contains(t, tol=1e-8 * max(1.0, t)):
        raise ValueError(f"statistic {t!r} is not in {region!r}")


def _log_mass(log_tails, lo, hi):
    lcl, lsl = log_tails(lo)
    lch, lsh = log_tails(hi)
    if lsl <= LOG_HALF:
        # both endpoints in the upper tail
        return lsl + log1mexp(lsh - lsl)
    if lch <= LOG_HALF:
        return lch + log1mexp(lcl - lch)
    return math.log1p(-(math.exp(lcl) + math.exp(lsh)))


def _logsumexp(values):
    values = [v for v in values if v != -math.inf]
    if not values:
        return -math.inf
    m = max(values)
    # add smallest terms first
    return m + math.log(math.fsum(sorted(math.exp(v - m) for v in values)))


def truncated_log_masses(spec: TruncatedSpec) -> tuple[float, float]:
    """``(log mass above the statistic, log total mass)`` of the truncated law."""
    T = spec.statistic
    above, total = [], []
    for lo, hi in spec.region:
        total.append(_log_mass(spec.log_tails, lo, hi))
        if hi > T:
            above.append(total[-1] if lo >= T else _log_mass(spec.log_tails, T, hi))
    return _logsumexp(above), _logsumexp(total)


def truncated_sf(spec: TruncatedSpec) -> float:
    """Selective p-value: region mass above the statistic over total region mass."""
    log_above, log_total = truncated_log_masses(spec)
    if log_total == -math.inf:
        raise RegionError(f"truncation region {spec.region!r} has zero probability mass")
    if log_above == -math.inf:
        return 0.0
    return min(1.0, math.exp(log_above - log_total))


def screen_bound(G: int, k: int, eps: float) -> float:
    """High-probability bound on the largest of ``G`` central chi-square(k) statistics.

    With ``x = -log(1 - (1 - eps)**(1/G))`` the maximum exceeds
    ``k + 2 sqrt(k x) + 2 x`` with probability below ``eps``.
    """
    if G < 1 or k < 1 or not 0.0 < eps < 1.0:
        raise ValueError("need G >= 1, k >= 1 and 0 < eps < 1")
    # 1 - (1 - eps)**(1/G) computed without cancellation
    tail = -math.expm1(math.log1p(-eps) / G)
    x = -math.log(tail)
    return k + 2.0 * math.sqrt(k * x) + 2.0 * x
