"""Selection rules: which coordinates get intervals, and in what order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SelectionResult", "select_top_k", "select_abs_max"]


@dataclass(frozen=True)
class SelectionResult:
    """Indices chosen by a selection rule.

    `selected` lists the chosen 0-based coordinates best-first; `ranks` is the
    full rank-to-index permutation of all m coordinates under the same rule.
    """

    selected: tuple[int, ...]
    ranks: tuple[int, ...]


def _check_values(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty 1-d array")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    return y


def select_top_k(y, k: int) -> SelectionResult:
    """The k largest coordinates of y, largest first; ties break toward the
    smaller index so the result is deterministic."""
    y = _check_values(y)
    if not 1 <= k <= y.size:
        raise ValueError(f"k must lie in 1..{y.size}, got {k}")
    order = np.argsort(-y, kind="stable")  # stable: equal values keep index order
    return SelectionResult(tuple(int(i) for i in order[:k]), tuple(int(i) for i in order))


def select_abs_max(y) -> SelectionResult:
    """The coordinate of a pair with the larger |y|; ties pick index 0."""
    y = _check_values(y)
    if y.size != 2:
        raise ValueError(f"abs-max selection needs exactly 2 coordinates, got {y.size}")
    first = 0 if abs(y[0]) >= abs(y[1]) else 1
    return SelectionResult((first,), (first, 1 - first))
