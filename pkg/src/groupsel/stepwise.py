"""Grouped forward stepwise selection with a recorded selection event.

Every comparison the greedy procedure makes is stored as a quadratic
inequality in the outcome,

    c_I ||y||^2 + sum_j w_j ||B_j^T y||^2 + a^T y + b >= 0,

where each ``B_j`` is an orthonormal basis from a shared pool. The
intersection of the inequalities is exactly the set of outcomes for which
the procedure reproduces the recorded path (and stopping decision).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import (GroupedDesign, InvalidInputError, OrthoBasis, orthonormal_basis,
                     residualize, stack_bases)

# residual sum of squares below this fraction of ||y||^2 counts as an exact fit
EXACT_FIT_TOL = 1e-12


class SelectionError(ValueError):
    """Invalid stepwise configuration or degenerate outcome."""


@dataclass(frozen=True)
class StepwiseConfig:
    """Stepwise settings.

    ``k`` is the complexity penalty (2 for AIC, ``log n`` for BIC,
    ``2 log p`` for RIC). ``sigma=None`` selects the unknown-variance
    criterion. With ``stop="aic"`` the path is cut at the first step after
    which the criterion rises ``s_plus`` times in a row, searching at most
    ``max_steps`` steps. ``intercept=True`` centers the outcome and every
    column first, so an unpenalized intercept is always in the model; the
    event and tests then live in the orthogonal complement of the constant
    vector.
    """

    k: float = 2.0
    sigma: float | None = None
    max_steps: int = 1
    stop: str = "fixed"
    s_plus: int = 1
    intercept: bool = False

    def __post_init__(self):
        if self.k < 0 or not math.isfinite(self.k):
            raise SelectionError("penalty k must be finite and >= 0")
        if self.sigma is not None and not self.sigma > 0:
            raise SelectionError("known sigma must be positive")
        if self.max_steps < 1:
            raise SelectionError("max_steps must be >= 1")
        if self.stop not in ("fixed", "aic"):
            raise SelectionError(f"unknown stopping rule {self.stop!r}")
        if self.stop == "aic" and self.s_plus < 1:
            raise SelectionError("s_plus must be >= 1")

    @property
    def known_sigma(self) -> bool:
        return self.sigma is not None


def penalty_for(name, n: int, p: int) -> float:
    """Map ``aic``/``bic``/``ric`` or a number to the multiplier ``k``."""
    if isinstance(name, (int, float)):
        return float(name)
    key = str(name).lower()
    if key == "aic":
        return 2.0
    if key == "bic":
        return math.log(n)
    if key == "ric":
        return 2.0 * math.log(p)
    return float(key)


@dataclass(frozen=True)
class QuadraticInequality:
    """``identity*||y||^2 + sum w ||B^T y||^2 + linear^T y + offset >= 0``.

    ``terms`` holds ``(weight, basis)`` pairs with orthonormal ``basis``
    columns. A ``(1, B+)``/``(-1, B-)`` pair is the plain difference of two
    projections.
    """

    terms: tuple = ()
    identity: float = 0.0
    linear: np.ndarray | None = None
    offset: float = 0.0
    step: int = 0
    kind: str = "step"


def evaluate_inequality(q: QuadraticInequality, v) -> float:
    v = np.asarray(v, dtype=float)
    total = q.offset + q.identity * float(v @ v)
    for w, B in q.terms:
        B = B.vectors if isinstance(B, OrthoBasis) else B
        if B.shape[0] != v.shape[0]:
            raise InvalidInputError("dimension mismatch between inequality and vector")
        pv = B.T @ v
        total += w * float(pv @ pv)
    if q.linear is not None:
        total += float(q.linear @ v)
    return total


@dataclass(frozen=True)
class PackedInequalities:
    """Column-packed form of an event's inequalities over a shared basis pool.

    Term ``i`` contributes ``weight[i] * ||bases[basis[i]]^T y||^2`` to
    inequality ``row[i]``.
    """

    row: np.ndarray
    basis: np.ndarray
    weight: np.ndarray
    identity: np.ndarray
    offset: np.ndarray
    linear: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.identity.shape[0]


@dataclass(frozen=True)
class SelectionEvent:
    """Ordered active set plus the inequalities whose intersection selects it.

    ``path`` is every step the event conditions on; with early stopping it can
    extend past ``active``. ``signs`` records whether the criterion rose at
    each step of ``path`` and ``stopped`` whether the early-stop rule fired.
    """

    active: tuple[int, ...]
    path: tuple[int, ...]
    signs: tuple[bool, ...]
    stopped: bool
    step_bases: tuple[OrthoBasis, ...]
    bases: tuple[np.ndarray, ...]
    packed: PackedInequalities
    kinds: tuple[str, ...]
    steps: tuple[int, ...]
    n_step_comparisons: int

    @property
    def n_inequalities(self) -> int:
        return self.packed.m

    def signature(self) -> tuple:
        return (self.path, self.signs, self.stopped)

    @property
    def inequalities(self) -> list[QuadraticInequality]:
        pk = self.packed
        out = []
        for j in range(pk.m):
            sel = pk.row == j
            terms = tuple((float(w), self.bases[b]) for w, b in zip(pk.weight[sel], pk.basis[sel]))
            out.append(QuadraticInequality(
                terms=terms, identity=float(pk.identity[j]),
                linear=None if pk.linear is None else pk.linear[j],
                offset=float(pk.offset[j]), step=self.steps[j], kind=self.kinds[j]))
        return out

    def evaluate(self, y) -> np.ndarray:
        """All constraint values at ``y`` (vectorized over the pool)."""
        y = np.asarray(y, dtype=float)
        pk = self.packed
        sq = np.array([float(np.sum((B.T @ y) ** 2)) for B in self.bases])
        vals = pk.offset + pk.identity * float(y @ y)
        if pk.row.size:
            vals = vals + np.bincount(pk.row, weights=pk.weight * sq[pk.basis], minlength=pk.m)
        if pk.linear is not None:
            vals = vals + pk.linear @ y
        return vals


class _EventBuilder:
    def __init__(self):
        self.bases: list[np.ndarray] = []
        self.row: list[int] = []
        self.basis: list[int] = []
        self.weight: list[float] = []
        self.identity: list[float] = []
        self.offset: list[float] = []
        self.kinds: list[str] = []
        self.steps: list[int] = []

    def add_basis(self, U: np.ndarray) -> int:
        self.bases.append(U)
        return len(self.bases) - 1

    def add(self, terms, identity, offset, step, kind):
        j = len(self.identity)
        for b, w in terms:
            if w != 0.0:
                self.row.append(j)
                self.basis.append(b)
                self.weight.append(w)
        self.identity.append(identity)
        self.offset.append(offset)
        self.steps.append(step)
        self.kinds.append(kind)

    def pack(self) -> PackedInequalities:
        return PackedInequalities(
            row=np.array(self.row, dtype=np.intp),
            basis=np.array(self.basis, dtype=np.intp),
            weight=np.array(self.weight, dtype=float),
            identity=np.array(self.identity, dtype=float),
            offset=np.array(self.offset, dtype=float))


@dataclass(frozen=True)
class StepwiseFit:
    """Result of :func:`forward_stepwise`."""

    design: GroupedDesign
    y: np.ndarray
    config: StepwiseConfig
    event: SelectionEvent
    criterion: tuple[float, ...]
    skipped: tuple[int, ...]
    coef: dict = field(repr=False)
    residual: np.ndarray = field(repr=False)

    @property
    def active(self) -> tuple[int, ...]:
        return self.event.active

    @property
    def model_size(self) -> int:
        """Number of selected groups, plus one for a fitted intercept."""
        return len(self.active) + int(self.config.intercept)

    def model_basis(self, groups: Sequence[int]) -> OrthoBasis:
        """Orthonormal basis of the columns of the given groups."""
        if len(groups) == 0:
            return OrthoBasis(np.zeros((self.design.n, 0)))
        return orthonormal_basis(self.design.submatrix(list(groups)))

    def fitted_basis(self, g: int) -> OrthoBasis:
        """Basis of ``(I - P_{A minus g}) X_g``."""
        if g not in self.active:
            raise SelectionError(f"group {g} is not in the active set {self.active}")
        rest = self.model_basis([h for h in self.active if h != g])
        Xg = self.design.group_matrix(g)
        resid = residualize(rest, Xg)
        scale = np.linalg.norm(Xg, 2) if Xg.size else 1.0
        return orthonormal_basis(resid, scale=scale, group=g)


def centered(design: GroupedDesign) -> GroupedDesign:
    """Copy of ``design`` with every column centered."""
    X = design.values
    return GroupedDesign(X - X.mean(axis=0), design.groups, design.names)


def _winner_terms(winner_idx, weight):
    return [(b, weight) for b in winner_idx]


def forward_stepwise(design: GroupedDesign, y, cfg: StepwiseConfig,
                     record: bool = True) -> StepwiseFit:
    """Run grouped forward stepwise and record its selection event.

    Known sigma: each step maximizes ``||U_g^T r||^2 - k sigma^2 rank_g`` over
    the orthogonalized candidate bases. Unknown sigma: each step minimizes
    ``RSS_g * exp(k rank_g / n)``. Ties go to the smallest group label.
    Groups whose orthogonalized basis has rank 0 leave the candidate pool.

    With ``record=False`` only the path is computed (no inequalities), which
    is what selection replay needs.
    """
    y = np.asarray(y, dtype=float)
    n = design.n
    if y.shape != (n,):
        raise InvalidInputError(f"outcome must have shape ({n},), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("outcome contains non-finite entries")
    if cfg.intercept:
        design = centered(design)
        y = y - y.mean()
    if cfg.stop == "fixed" and cfg.max_steps > design.G:
        raise SelectionError(f"steps ({cfg.max_steps}) exceed number of groups ({design.G})")
    yy = float(y @ y)
    if yy == 0.0:
        raise SelectionError("outcome has zero variance")

    known = cfg.known_sigma
    k = cfg.k
    s2 = cfg.sigma ** 2 if known else None
    aic = cfg.stop == "aic"
    max_steps = min(cfg.max_steps, design.G)

    cand: dict[int, np.ndarray] = {}
    skipped = []
    for g in design.labels:
        Xg = design.group_matrix(g)
        U = orthonormal_basis(Xg).vectors
        if U.shape[1] == 0:
            skipped.append(g)
        else:
            cand[g] = U

    builder = _EventBuilder() if record else None
    winner_idx: list[int] = []
    step_bases: list[OrthoBasis] = []
    path: list[int] = []
    signs: list[bool] = []
    stopped = False
    r = y.copy()
    rss_prev = yy
    edf = 0
    crit = [yy / s2 if known else n * math.log(yy) + k]
    n_cmp = 0

    while len(path) < max_steps and cand:
        s = len(path) + 1
        labels = sorted(cand)
        proj = {g: float(np.sum((cand[g].T @ r) ** 2)) for g in labels}
        ranks = {g: cand[g].shape[1] for g in labels}
        if known:
            gains = {g: proj[g] - k * s2 * ranks[g] for g in labels}
            best = labels[0]
            for g in labels[1:]:
                if gains[g] > gains[best]:
                    best = g
        else:
            mult = {g: math.exp(k * ranks[g] / n) for g in labels}
            score = {g: (rss_prev - proj[g]) * mult[g] for g in labels}
            best = labels[0]
            for g in labels[1:]:
                if score[g] < score[best]:
                    best = g

        rss_new = rss_prev - proj[best]
        if known:
            crit.append(crit[-1] - gains[best] / s2)
            increased = gains[best] < 0.0
        else:
            # cancellation leaves roundoff of order eps * ||y||^2 when y is interpolated
            if rss_new <= EXACT_FIT_TOL * yy:
                raise SelectionError("outcome fit exactly; residual sum of squares is zero")
            crit.append(n * math.log(rss_new) + k * (1 + edf + ranks[best]))
            increased = score[best] > rss_prev

        # signs holds steps 1..s-1; the rule needs the last s_plus - 1 of them raised too
        fire = aic and increased and s >= cfg.s_plus and all(signs[s - cfg.s_plus:])

        if record:
            idx = {g: builder.add_basis(cand[g]) for g in labels}
            if fire:
                # the stop step: every candidate would raise the criterion
                for g in labels:
                    _add_sign(builder, idx[g], ranks[g], winner_idx, True, known, k, s2, n, s, "stop")
            else:
                for g in labels:
                    if g == best:
                        continue
                    _add_comparison(builder, idx[best], ranks[best], idx[g], ranks[g],
                                    winner_idx, known, k, s2, n, s)
                    n_cmp += 1
                if aic:
                    _add_sign(builder, idx[best], ranks[best], winner_idx, increased,
                              known, k, s2, n, s, "sign")
        if fire:
            stopped = True
            break

        path.append(best)
        if aic:
            signs.append(increased)
        Ub = cand.pop(best)
        step_bases.append(OrthoBasis(Ub, best))
        if record:
            winner_idx.append(idx[best])
        r = r - Ub @ (Ub.T @ r)
        rss_prev = rss_new
        edf += Ub.shape[1]
        for g in list(cand):
            U = cand[g]
            res = U - Ub @ (Ub.T @ U)
            Unew = orthonormal_basis(res, scale=1.0).vectors
            if Unew.shape[1] == 0:
                del cand[g]
                skipped.append(g)
            else:
                cand[g] = Unew

    n_active = len(path) - (cfg.s_plus - 1) if stopped else len(path)
    active = tuple(path[:n_active])
    if record:
        packed = builder.pack()
        kinds, steps, bases = tuple(builder.kinds), tuple(builder.steps), tuple(builder.bases)
    else:
        packed = _EventBuilder().pack()
        kinds, steps, bases = (), (), ()
    event = SelectionEvent(
        active=active, path=tuple(path), signs=tuple(signs), stopped=stopped,
        step_bases=tuple(step_bases), bases=bases, packed=packed, kinds=kinds,
        steps=steps, n_step_comparisons=n_cmp)

    coef, resid = _least_squares(design, y, active)
    return StepwiseFit(design=design, y=y, config=cfg, event=event,
                       criterion=tuple(crit), skipped=tuple(skipped),
                       coef=coef, residual=resid)


def _add_comparison(builder, bw, rw, bg, rg, winner_idx, known, k, s2, n, s):
    # winner beats loser g at step s
    if known:
        builder.add([(bw, 1.0), (bg, -1.0)], 0.0, -k * s2 * (rw - rg), s, "step")
        return
    ww = math.exp(k * rw / n)
    wg = math.exp(k * rg / n)
    d = wg - ww
    terms = _winner_terms(winner_idx, -d) + [(bw, ww), (bg, -wg)]
    builder.add(terms, d, 0.0, s, "step")


def _add_sign(builder, b, rank, winner_idx, increased, known, k, s2, n, s, kind):
    # sign of the criterion change when basis b enters at step s
    sgn = 1.0 if increased else -1.0
    if known:
        builder.add([(b, -sgn)], 0.0, sgn * k * s2 * rank, s, kind)
        return
    w = math.exp(k * rank / n)
    terms = _winner_terms(winner_idx, -sgn * (w - 1.0)) + [(b, -sgn * w)]
    builder.add(terms, sgn * (w - 1.0), 0.0, s, kind)


def _least_squares(design, y, active):
    if not active:
        return {}, y.copy()
    XA = design.submatrix(list(active))
    beta, *_ = np.linalg.lstsq(XA, y, rcond=None)
    coef = {}
    pos = 0
    for g in active:
        w = len(design.columns(g))
        coef[g] = beta[pos:pos + w]
        pos += w
    return coef, y - XA @ beta


def aic_trace(design: GroupedDesign, y, cfg: StepwiseConfig) -> tuple[list[float], int]:
    """Criterion values per visited step and the selected model size.

    Entry ``s`` is the criterion after the first ``s`` steps of the path.
    When the stopping rule fired, one further entry holds the value the best
    remaining candidate would have reached at the stop step.
    """
    if cfg.stop != "aic":
        raise SelectionError("aic_trace needs an early-stopping configuration")
    fit = forward_stepwise(design, y, cfg, record=False)
    return list(fit.criterion), len(fit.active)


def stop_index(values: Sequence[float], s_plus: int) -> int:
    """Model size chosen by the early-stopping rule from criterion values.

    ``values[s]`` is the criterion after ``s`` steps. Returns the first ``s``
    after which the criterion rises ``s_plus`` times in a row, or the last
    index when that never happens.
    """
    if s_plus < 1:
        raise SelectionError("s_plus must be >= 1")
    run = 0
    for s in range(1, len(values)):
        run = run + 1 if values[s] > values[s - 1] else 0
        if run == s_plus:
            return s - s_plus
    return len(values) - 1


def selection_signature(design: GroupedDesign, y, cfg: StepwiseConfig) -> tuple:
    """Replay the procedure on ``y`` and return what its event conditions on."""
    return forward_stepwise(design, y, cfg, record=False).event.signature()


def winners_basis(event: SelectionEvent, steps: int | None = None) -> OrthoBasis:
    """Stacked orthogonalized bases of the first ``steps`` winners."""
    bases = event.step_bases[:steps]
    if not bases:
        raise SelectionError("no steps taken")
    return stack_bases(bases)
