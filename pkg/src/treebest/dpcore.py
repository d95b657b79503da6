"""Min-sum dynamic programming on a tree: message pass, backtracking, MAP."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import InvalidModelError, Labeling, TreeModel, energy_of, require_valid
from .report import SolverReport, Status

__all__ = ["MessageTable", "message_pass", "backtrack", "map_solve", "trace_layers", "hamming_to"]


@dataclass(frozen=True)
class MessageTable:
    """Result of one leaves-to-root pass.

    ``energies[v, s]`` is the best energy of the subtree under ``v`` with ``v``
    in state ``s``; ``backpointers[u, s]`` is the best state of ``u`` when its
    parent is in state ``s``.  Rows are padded to the widest node with ``inf``.
    """

    model: TreeModel
    energies: np.ndarray
    messages: np.ndarray
    backpointers: np.ndarray
    processing_order: np.ndarray

    def root_energies(self) -> np.ndarray:
        r = self.model.root
        return self.energies[r, : self.model.label_counts[r]]


def message_pass(model: TreeModel) -> MessageTable:
    p = model.packed
    E, msg, arg = kernels.map_pass(p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx)
    return MessageTable(model, E, msg, arg, p.order)


def trace_layers(
    model: TreeModel,
    args: Sequence[np.ndarray],
    jumps: Sequence[np.ndarray],
    srcs: Sequence[np.ndarray],
    layer: int,
    state: int,
) -> tuple[int, ...]:
    """Backtrack a (possibly layered) pass from ``(root, layer, state)``.

    Layer 0 holds the plain pass, ``jumps[l]``/``srcs[l]`` describe how layer
    ``l`` was reached; their entry at index 0 is ignored.
    """
    K = layer + 1
    n, L = args[0].shape
    arg = np.stack(args[:K])
    jump = np.zeros((K, n, L), dtype=np.bool_)
    src = np.zeros((K, n, L), dtype=np.int64)
    for l in range(1, K):
        jump[l] = jumps[l]
        src[l] = srcs[l]
    p = model.packed
    return tuple(kernels.trace(arg, jump, src, p.parent, p.order, layer, state).tolist())


def backtrack(table: MessageTable, root_state: int) -> Labeling:
    model = table.model
    if not 0 <= root_state < model.label_counts[model.root]:
        raise InvalidModelError(f"root state {root_state} out of range")
    x = trace_layers(model, [table.backpointers], [None], [None], 0, root_state)
    return Labeling(x, energy_of(model, x))


def hamming_to(x: Sequence[int], others: Sequence[Sequence[int]]) -> int | None:
    if not others:
        return None
    return int((np.asarray(others) != np.asarray(x)).sum(axis=1).min())


def map_solve(model: TreeModel) -> SolverReport:
    """Minimum-energy assignment; lowest state index wins ties."""
    require_valid(model)
    t0 = time.perf_counter_ns()
    table = message_pass(model)
    root = table.root_energies()
    s = int(np.argmin(root))
    if root[s] == np.inf:
        return SolverReport(
            Status.INFEASIBLE, "map", runtime_ns=time.perf_counter_ns() - t0, counters={"passes": 1}
        )
    sol = backtrack(table, s)
    return SolverReport(
        Status.SOLVED,
        "map",
        [sol],
        [None],
        runtime_ns=time.perf_counter_ns() - t0,
        counters={"passes": 1},
    )
