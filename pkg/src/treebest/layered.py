"""Second-best and M-best solutions by stacking layers of the tree.

Layer 0 is the ordinary min-sum pass.  Each further layer is a copy of the
tree that can only be entered by a jump ``(v, s)`` from the layer below at a
state that differs from the solution that layer stands for, or through its
children: at least one of them must already sit on the new layer, the rest
cross over from layer 0.  A finite root energy on layer ``m`` therefore
certifies an assignment that differs from each of the ``m`` represented
solutions somewhere, using exactly ``m`` jumps.

Layers are never materialised as a graph; each one is a set of ``(n, L)``
arrays over the shared tree.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .dpcore import MessageTable, hamming_to, message_pass
from .model import (
    InvalidModelError,
    Labeling,
    TreeModel,
    check_assignment,
    energy_of,
    require_valid,
    traced_energies,
    traced_energy,
)
from .report import SolverReport, Status

__all__ = ["Mode", "JumpConstraint", "LayeredRun", "second_best", "m_best_sequential"]


class Mode(str, Enum):
    NAIVE = "naive"
    PERMUTATION_EXACT = "exact"


@dataclass(frozen=True)
class JumpConstraint:
    """Jumping to the next layer is forbidden at ``(v, states[v])``."""

    states: tuple[int, ...]

    @classmethod
    def from_labeling(cls, labeling: Labeling | Sequence[int]) -> "JumpConstraint":
        x = labeling.assignment if isinstance(labeling, Labeling) else labeling
        return cls(tuple(map(int, x)))

    @property
    def forbidden(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset([s]) for s in self.states)

    def allowed(self, shape: tuple[int, int]) -> np.ndarray:
        mask = np.ones(shape, dtype=np.bool_)
        mask[np.arange(shape[0]), self.states] = False
        return mask


@dataclass(frozen=True)
class LayeredRun:
    """Per-layer DP arrays of a stack of layers over one model.

    ``jumps[l][v, s]`` tells whether the optimum at ``(v, s)`` on layer ``l``
    arrived by a jump; ``srcs[l][u, s]`` is the layer the message of child
    ``u`` was taken from.  Index 0 of both is unused.  ``stacked`` holds the
    same backtracking arrays as ``(layers, n, L)`` blocks for the trace kernel.
    """

    model: TreeModel
    constraints: tuple[JumpConstraint, ...]
    energies: tuple[np.ndarray, ...]
    messages: tuple[np.ndarray, ...]
    args: tuple[np.ndarray, ...]
    jumps: tuple[Optional[np.ndarray], ...]
    srcs: tuple[Optional[np.ndarray], ...]
    counters: dict = field(default_factory=dict, compare=False)
    stacked: tuple[np.ndarray, np.ndarray, np.ndarray] = field(default=None, compare=False, repr=False)

    @classmethod
    def base(cls, table: MessageTable) -> "LayeredRun":
        arg = table.backpointers[None]
        return cls(
            table.model,
            (),
            (table.energies,),
            (table.messages,),
            (table.backpointers,),
            (None,),
            (None,),
            {"layer1_passes": 1, "layer_steps": 0},
            (arg, np.zeros(arg.shape, dtype=np.bool_), np.zeros(arg.shape, dtype=np.int64)),
        )

    @property
    def layer_count(self) -> int:
        return len(self.energies)

    def extend(self, constraint: JumpConstraint, allowed: np.ndarray | None = None) -> "LayeredRun":
        """Add a layer; ``allowed`` may carry a precomputed ``constraint.allowed`` mask."""
        p = self.model.packed
        top = self.layer_count
        E, msg, arg, jump, src = kernels.layer_step(
            p.unary,
            p.pair,
            p.parent,
            p.order,
            p.child_ptr,
            p.child_idx,
            self.energies[-1],
            self.messages[0],
            constraint.allowed(p.unary.shape) if allowed is None else allowed,
            top,
        )
        self.counters["layer_steps"] += 1
        args, jumps, srcs = self.stacked
        return LayeredRun(
            self.model,
            self.constraints + (constraint,),
            self.energies + (E,),
            self.messages + (msg,),
            self.args + (arg,),
            self.jumps + (jump,),
            self.srcs + (src,),
            self.counters,
            (
                np.concatenate((args, arg[None])),
                np.concatenate((jumps, jump[None])),
                np.concatenate((srcs, src[None])),
            ),
        )

    def root_best(self) -> tuple[int, float]:
        r = self.model.root
        row = self.energies[-1][r, : self.model.label_counts[r]]
        s = int(np.argmin(row))
        return s, float(row[s])

    def trace(self, state: int) -> tuple[int, ...]:
        return tuple(self.trace_array(state).tolist())

    def trace_array(self, state: int) -> np.ndarray:
        p = self.model.packed
        return kernels.trace(*self.stacked, p.parent, p.order, self.layer_count - 1, state)


def _check_labeling(model: TreeModel, labeling: Labeling) -> None:
    check_assignment(model, labeling.assignment)
    if energy_of(model, labeling.assignment) == np.inf:
        raise InvalidModelError("reference labeling has infinite energy")


def second_best(model: TreeModel, best: Labeling, table: MessageTable | None = None) -> SolverReport:
    """Cheapest assignment differing from ``best`` in at least one node."""
    require_valid(model)
    _check_labeling(model, best)
    t0 = time.perf_counter_ns()
    run = LayeredRun.base(table if table is not None else message_pass(model))
    run = run.extend(JumpConstraint.from_labeling(best))
    s, e = run.root_best()
    report = SolverReport(Status.EXHAUSTED, "second_best", counters=run.counters)
    if e != np.inf:
        x = run.trace(s)
        report.status = Status.SOLVED
        report.solutions = [Labeling(x, energy_of(model, x))]
        report.hammings = [hamming_to(x, [best.assignment])]
    report.runtime_ns = time.perf_counter_ns() - t0
    return report


def _best_over_orderings(base: LayeredRun, constraints: list[JumpConstraint], short_circuit: float | None):
    """Try every ordering of ``constraints`` as layers, depth first.

    Orderings are visited in lexicographic order and only strictly better
    candidates replace the incumbent, so ties go to the smallest ordering.
    Layers shared by a common prefix are computed once.
    """
    best = [np.inf, None, None]  # energy, run, ordering

    def visit(run: LayeredRun, remaining: list[int], prefix: list[int]) -> bool:
        if not remaining:
            s, e = run.root_best()
            if e < best[0]:
                best[:] = [e, (run, s), tuple(prefix)]
            return short_circuit is not None and best[0] <= short_circuit
        for i in remaining:
            rest = [j for j in remaining if j != i]
            if visit(run.extend(constraints[i]), rest, prefix + [i]):
                return True
        return False

    visit(base, list(range(len(constraints))), [])
    return best


def m_best_sequential(
    model: TreeModel,
    M: int,
    mode: Mode | str = Mode.NAIVE,
    short_circuit: bool = False,
) -> SolverReport:
    """Up to ``M`` distinct low-energy assignments, found one at a time.

    ``Mode.NAIVE`` keeps one layer per earlier solution in discovery order and
    adds a single layer per new solution.  ``Mode.PERMUTATION_EXACT`` rebuilds
    the stack for every ordering of the earlier solutions and keeps the
    cheapest result, at a factor ``(M-1)!`` in cost.  With ``short_circuit``
    the search over orderings stops once a candidate ties the energy of the
    last solution found.
    """
    if M < 1:
        raise InvalidModelError("M must be >= 1")
    mode = Mode(mode)
    require_valid(model)
    if mode is Mode.NAIVE:
        return _naive(model, M)
    t0 = time.perf_counter_ns()
    table = message_pass(model)
    base = LayeredRun.base(table)
    method = f"mbest_{mode.value}"

    r = model.root
    root_row = table.energies[r, : model.label_counts[r]]
    s = int(np.argmin(root_row))
    if root_row[s] == np.inf:
        return SolverReport(Status.INFEASIBLE, method, runtime_ns=time.perf_counter_ns() - t0, counters=base.counters)

    x = base.trace_array(s)
    solutions = [Labeling(x.tolist(), traced_energy(model, x))]
    seen = np.empty((M, model.node_count), dtype=np.int64)
    seen[0] = x
    hammings: list[Optional[int]] = [None]
    orderings = []
    status = Status.SOLVED
    while len(solutions) < M:
        constraints = [JumpConstraint(sol.assignment) for sol in solutions]
        bound = solutions[-1].energy if short_circuit else None
        e, found, ordering = _best_over_orderings(base, constraints, bound)
        orderings.append(ordering)
        if found is None:
            status = Status.EXHAUSTED
            break
        x = found[0].trace_array(found[1])
        i = len(solutions)
        hammings.append(int((seen[:i] != x).sum(axis=1).min()))
        seen[i] = x
        solutions.append(Labeling(x.tolist(), traced_energy(model, x)))

    return SolverReport(
        status,
        method,
        solutions,
        hammings,
        runtime_ns=time.perf_counter_ns() - t0,
        counters=dict(base.counters),
        info={"orderings": orderings},
    )


def _naive(model: TreeModel, M: int) -> SolverReport:
    # the whole stack runs inside one kernel call
    t0 = time.perf_counter_ns()
    p = model.packed
    X, count, steps = kernels.naive_mbest(p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx, model.root, M)
    counters = {"layer1_passes": 1, "layer_steps": int(steps)}
    if count == 0:
        return SolverReport(Status.INFEASIBLE, "mbest_naive", runtime_ns=time.perf_counter_ns() - t0, counters=counters)
    X = X[:count]
    solutions = list(map(Labeling, X.tolist(), traced_energies(model, X).tolist()))
    # distance of each solution to its nearest predecessor
    D = (X[:, None, :] != X[None, :, :]).sum(axis=2)
    D[np.triu_indices(count)] = model.node_count + 1
    hammings: list[Optional[int]] = [None] + D.min(axis=1)[1:].tolist()
    return SolverReport(
        Status.SOLVED if count == M else Status.EXHAUSTED,
        "mbest_naive",
        solutions,
        hammings,
        runtime_ns=time.perf_counter_ns() - t0,
        counters=counters,
        info={"orderings": [tuple(range(i)) for i in range(1, steps + 1)]},
    )
