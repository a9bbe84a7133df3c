"""Grouped designs and orthonormal-basis projections.

Projections are always carried as an ``n x r`` matrix ``U`` with orthonormal
columns; ``P = U U^T`` is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RANK_TOL = 1e-10


class InvalidInputError(ValueError):
    """Raised for malformed or non-finite inputs."""


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal basis of a column space.

    Attributes
    ----------
    vectors : ndarray, shape (n, r)
        Orthonormal columns. ``r`` may be zero.
    group : int or None
        Label of the group the basis was built from, if any.
    """

    vectors: np.ndarray
    group: int | None = None

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class GroupedDesign:
    """Predictor matrix with an a-priori partition of its columns.

    ``groups`` holds, for each column, its label in ``1..G``.
    """

    values: np.ndarray
    groups: np.ndarray
    names: tuple[str, ...] | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.asarray(self.values, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError("design must be a 2-d array")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("design contains non-finite entries")
        labels = np.asarray(self.groups, dtype=int).ravel()
        if labels.shape[0] != X.shape[1]:
            raise InvalidInputError(
                f"group labels ({labels.shape[0]}) do not match columns ({X.shape[1]})")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError("design must have at least one row and one column")
        G = labels.max()
        if labels.min() != 1 or set(np.unique(labels)) != set(range(1, G + 1)):
            raise InvalidInputError("group labels must cover 1..G with no gaps")
        object.__setattr__(self, "values", X)
        object.__setattr__(self, "groups", labels)
        index = {g: np.flatnonzero(labels == g) for g in range(1, G + 1)}
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_sizes(cls, X, sizes: Sequence[int]) -> "GroupedDesign":
        """Consecutive groups of the given sizes."""
        labels = np.repeat(np.arange(1, len(sizes) + 1), sizes)
        return cls(X, labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def G(self) -> int:
        return len(self._index)

    @property
    def labels(self) -> range:
        return range(1, self.G + 1)

    def columns(self, g: int) -> np.ndarray:
        return self._index[g]

    def group_matrix(self, g: int) -> np.ndarray:
        return self.values[:, self._index[g]]

    def submatrix(self, groups: Sequence[int]) -> np.ndarray:
        if len(groups) == 0:
            return np.zeros((self.n, 0))
        cols = np.concatenate([self._index[g] for g in groups])
        return self.values[:, cols]

    def group_sizes(self) -> list[int]:
        return [len(self._index[g]) for g in self.labels]


def orthonormal_basis(cols, tol: float = RANK_TOL, scale: float | None = None,
                      group: int | None = None) -> OrthoBasis:
    """Orthonormal basis for the column space of ``cols`` via a thin SVD.

    Singular directions with singular value ``<= tol * scale`` are dropped,
    where ``scale`` defaults to the largest singular value. Pass an explicit
    ``scale`` when ``cols`` is a residualized block whose surviving
    magnitudes must be judged against the original size.
    """
    A = np.asarray(cols, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("non-finite entries in basis input")
    n = A.shape[0]
    if A.shape[1] == 0 or not np.any(A):
        return OrthoBasis(np.zeros((n, 0)), group)
    U, d, _ = np.linalg.svd(A, full_matrices=False)
    ref = d[0] if scale is None else scale
    keep = d > tol * ref
    return OrthoBasis(np.ascontiguousarray(U[:, keep]), group)


def _vectors(basis) -> np.ndarray:
    return basis.vectors if isinstance(basis, OrthoBasis) else np.asarray(basis)


def project(basis, v) -> np.ndarray:
    """Apply ``U U^T`` to ``v`` (vector or matrix of columns)."""
    U = _vectors(basis)
    v = np.asarray(v, dtype=float)
    if v.shape[0] != U.shape[0]:
        raise InvalidInputError(f"dimension mismatch: basis has n={U.shape[0]}, got {v.shape[0]}")
    return U @ (U.T @ v)


def residualize(basis, v) -> np.ndarray:
    """Apply ``I - U U^T``."""
    v = np.asarray(v, dtype=float)
    return v - project(basis, v)


def residualize_group(Xg, basis) -> np.ndarray:
    """Remove from each column of ``Xg`` its component in span(basis)."""
    Xg = np.asarray(Xg, dtype=float)
    if Xg.ndim == 1:
        Xg = Xg[:, None]
    return residualize(basis, Xg)


def stack_bases(bases: Sequence) -> OrthoBasis:
    """Concatenate mutually orthogonal bases into one."""
    mats = [_vectors(b) for b in bases]
    if not mats:
        raise InvalidInputError("need at least one basis")
    return OrthoBasis(np.hstack(mats))
