"""CSV loading and the fit-and-test table for a single dataset."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..distributions import screen_bound
from ..inference import test_all_active
from ..linalg import GroupedDesign, InvalidInputError
from ..stepwise import StepwiseConfig, forward_stepwise

ANALYSIS_COLUMNS = ("Step", "Variable", "Naive", "Selective")


@dataclass(frozen=True)
class Dataset:
    """Outcome, grouped predictors and an optional known noise scale."""

    outcome: str
    y: np.ndarray
    design: GroupedDesign
    group_names: tuple[str, ...]
    sigma: float | None = None

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def G(self) -> int:
        return self.design.G

    def group_members(self, g: int) -> tuple[str, ...]:
        names = self.design.names
        return tuple(names[j] for j in self.design.columns(g))


def _read_rows(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise InvalidInputError(f"{path}: not UTF-8 ({exc})") from None
    if not rows or not rows[0]:
        raise InvalidInputError(f"{path}: missing header row")
    return [h.strip() for h in rows[0]], rows[1:]


def _parse(cell: str) -> float:
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError(cell)
    return v


def load_groups(path, predictors) -> dict[str, str]:
    """Read a ``predictor,group`` CSV; every predictor must be covered."""
    header, rows = _read_rows(path)
    if header[:2] != ["predictor", "group"]:
        raise InvalidInputError(f"{path}: group map header must be 'predictor,group'")
    mapping = {}
    for row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise InvalidInputError(f"{path}: malformed row {row!r}")
        name, grp = row[0].strip(), row[1].strip()
        if name not in predictors:
            raise InvalidInputError(f"{path}: unknown predictor {name!r}")
        if name in mapping:
            raise InvalidInputError(f"{path}: predictor {name!r} listed twice")
        mapping[name] = grp
    missing = [p for p in predictors if p not in mapping]
    if missing:
        raise InvalidInputError(f"{path}: predictors without a group: {missing}")
    return mapping


def load_csv(path, groups_path=None, outcome: str | None = None,
             standardize: bool = False, sigma: float | None = None) -> Dataset:
    """Load a dataset from a header-row CSV.

    Parameters
    ----------
    path : path-like
        Comma-separated file with a header. ``outcome`` names the response
        column (default: the first column); every other column is a predictor.
    groups_path : path-like, optional
        ``predictor,group`` map. Without it each predictor is its own group.
        Group labels are numbered ``1..G`` in order of first appearance.
    standardize : bool
        Center and scale each predictor to unit standard deviation.
    sigma : float, optional
        Known noise scale carried along with the data.

    Rows with an empty or non-numeric cell are dropped with a warning.
    """
    header, rows = _read_rows(path)
    if len(set(header)) != len(header):
        raise InvalidInputError(f"{path}: duplicate column names")
    if outcome is None:
        outcome = header[0]
    if outcome not in header:
        raise InvalidInputError(f"{path}: no outcome column {outcome!r}")
    predictors = [h for h in header if h != outcome]
    if not predictors:
        raise InvalidInputError(f"{path}: no predictor columns")

    data, dropped = [], 0
    for row in rows:
        if not row:
            continue
        if len(row) != len(header):
            raise InvalidInputError(f"{path}: row has {len(row)} cells, header has {len(header)}")
        try:
            data.append([_parse(c) for c in row])
        except ValueError:
            dropped += 1
    if dropped:
        warnings.warn(f"dropped {dropped} row(s) with missing or non-numeric values",
                      stacklevel=2)
    if not data:
        raise InvalidInputError(f"{path}: no usable rows")

    table = np.array(data)
    col = {h: i for i, h in enumerate(header)}
    y = table[:, col[outcome]]
    X = table[:, [col[p] for p in predictors]]
    if standardize:
        sd = X.std(axis=0)
        if np.any(sd == 0):
            raise InvalidInputError("cannot standardize a constant predictor")
        X = (X - X.mean(axis=0)) / sd

    mapping = load_groups(groups_path, set(predictors)) if groups_path else {p: p for p in predictors}
    order: dict[str, int] = {}
    for p in predictors:
        order.setdefault(mapping[p], len(order) + 1)
    # columns are reordered so each group is contiguous
    perm = sorted(range(len(predictors)), key=lambda j: order[mapping[predictors[j]]])
    labels = [order[mapping[predictors[j]]] for j in perm]
    design = GroupedDesign(X[:, perm], labels, tuple(predictors[j] for j in perm))
    return Dataset(outcome=outcome, y=y, design=design,
                   group_names=tuple(order), sigma=sigma)


def run_analysis(ds: Dataset, cfg: StepwiseConfig, sigma: float | str | None = None) -> list[dict]:
    """Fit stepwise on ``ds`` and test every selected group.

    Returns one dict per active group in entry order with keys ``step``,
    ``group`` (the group name), ``variables``, ``naive``, ``selective`` and
    ``error``. ``sigma`` overrides the dataset's own value;
    ``None`` and ``"unknown"`` run the F test.
    """
    if sigma is None:
        sigma = ds.sigma if ds.sigma is not None else cfg.sigma
    sigma = None if sigma is None or sigma == "unknown" else float(sigma)
    cfg = replace(cfg, sigma=sigma)
    fit = forward_stepwise(ds.design, ds.y, cfg)
    rows = []
    for res in test_all_active(fit, sigma):
        rows.append({
            "step": res.step,
            "group": ds.group_names[res.group - 1],
            "variables": ",".join(ds.group_members(res.group)),
            "naive": res.naive_pvalue,
            "selective": res.pvalue,
            "error": res.error,
        })
    return rows


def screen_bound_table(Gs, ks, eps) -> list[list[float]]:
    """``screen_bound(G, k, eps)`` rounded to 2 decimals; rows follow ``Gs``."""
    return [[round(screen_bound(G, k, eps), 2) for k in ks] for G in Gs]


def format_bound_table(Gs, ks, eps) -> str:
    table = screen_bound_table(Gs, ks, eps)
    head = f"{'G':>6}" + "".join(f"{'k=' + str(k):>10}" for k in ks)
    lines = [f"# upper {100 * (1 - eps):g}% bounds", head]
    for G, row in zip(Gs, table):
        lines.append(f"{G:>6}" + "".join(f"{v:>10.2f}" for v in row))
    return "\n".join(lines) + "\n"
