"""Brute-force reference answers by enumerating every assignment.

Energies come from :func:`treebest.model.energies_of` only; nothing here
touches the DP code.
"""
from __future__ import annotations

import itertools
from typing import Optional, Sequence

import numpy as np

from .model import InvalidModelError, Labeling, TreeModel, energies_of

__all__ = ["DEFAULT_CAP", "StateSpaceTooLarge", "all_assignments", "enumerate_best", "best_with_min_distance", "hamming"]

DEFAULT_CAP = 2**20


class StateSpaceTooLarge(InvalidModelError):
    pass


def all_assignments(model: TreeModel, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Every assignment as rows of an int array, in lexicographic order."""
    size = model.state_space_size
    if size > cap:
        raise StateSpaceTooLarge(f"{size} assignments exceed the cap of {cap}")
    return np.array(list(itertools.product(*(range(c) for c in model.label_counts))), dtype=np.int64).reshape(
        size, model.node_count
    )


def enumerate_best(model: TreeModel, M: int, cap: int = DEFAULT_CAP) -> list[Labeling]:
    """The ``M`` cheapest assignments; equal energies keep lexicographic order."""
    X = all_assignments(model, cap)
    e = energies_of(model, X)
    idx = np.argsort(e, kind="stable")[:M]
    return [Labeling(tuple(X[i]), e[i]) for i in idx]


def hamming(a: Labeling | Sequence[int], b: Labeling | Sequence[int]) -> int:
    xa = a.assignment if isinstance(a, Labeling) else tuple(a)
    xb = b.assignment if isinstance(b, Labeling) else tuple(b)
    if len(xa) != len(xb):
        raise InvalidModelError(f"labelings of length {len(xa)} and {len(xb)} cannot be compared")
    return sum(1 for s, t in zip(xa, xb) if s != t)


def best_with_min_distance(
    model: TreeModel, previous: Sequence[Labeling], k: int, cap: int = DEFAULT_CAP
) -> Optional[Labeling]:
    """Cheapest assignment at Hamming distance >= ``k`` from every labeling in ``previous``."""
    X = all_assignments(model, cap)
    e = energies_of(model, X)
    ok = np.ones(len(X), dtype=bool)
    for prev in previous:
        ok &= (X != np.asarray(prev.assignment)).sum(axis=1) >= k
    if not ok.any():
        return None
    idx = np.flatnonzero(ok)
    i = idx[np.argmin(e[idx])]
    return Labeling(tuple(X[i]), e[i])
