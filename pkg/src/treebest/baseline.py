"""Lagrangian divmbest baseline.

The Hamming constraint ``min_j hamming(x, previous_j) >= k`` is moved into
the objective with one shared multiplier: every state that differs from a
previous solution earns a bonus of ``lam`` per previous solution.  ``lam``
follows a projected subgradient schedule with step ``1/n`` at iteration
``n``.  Nothing forces the constraint to hold, so the returned solution may
be closer than ``k``.

Which iterate is returned is controlled by ``selection``:

``"dual"`` (default)
    the iterate of the best dual bound ``E(x) - lam * (hamming - k)``;
``"feasible"``
    the cheapest iterate meeting the distance, else the last one;
``"last"``
    the last iterate.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .dpcore import hamming_to, trace_layers
from .model import InvalidModelError, Labeling, TreeModel, check_assignment, energy_of, require_valid
from .report import SolverReport, Status

__all__ = ["LagrangianState", "divmbest_next", "dissimilarity"]


@dataclass
class LagrangianState:
    lam: float = 0.0
    iteration: int = 0
    best_feasible: Optional[Labeling] = None
    trace: list[tuple[float, float, int]] = field(default_factory=list)  # (lam, energy, hamming)
    stop_reason: str = ""


def dissimilarity(model: TreeModel, previous: Sequence[Labeling]) -> np.ndarray:
    """Padded ``(n, L)`` count of previous solutions each state differs from."""
    shape = model.packed.unary.shape
    delta = np.zeros(shape)
    rows = np.arange(model.node_count)
    for prev in previous:
        d = np.ones(shape)
        d[rows, np.asarray(prev.assignment)] = 0.0
        delta += d
    return delta


def divmbest_next(
    model: TreeModel,
    previous: Sequence[Labeling],
    k: int,
    max_iterations: int = 100,
    lam0: float = 0.0,
    selection: str = "dual",
) -> SolverReport:
    """Next solution by subgradient ascent on the relaxed diversity constraint.

    Each iterate is the exact MAP of the model with unaries lowered by
    ``lam * dissimilarity``.  The run stops after ``max_iterations`` or when
    an iterate repeats with an unchanged multiplier.  Energies are always
    measured on the original model.
    """
    if not previous:
        raise InvalidModelError("divmbest needs at least one previous solution")
    if k < 0 or max_iterations < 1:
        raise InvalidModelError("k must be >= 0 and max_iterations >= 1")
    if selection not in ("dual", "feasible", "last"):
        raise InvalidModelError(f"unknown selection rule {selection!r}")
    require_valid(model)
    for prev in previous:
        check_assignment(model, prev.assignment)
    t0 = time.perf_counter_ns()
    p = model.packed
    delta = dissimilarity(model, previous)
    prev_x = [prev.assignment for prev in previous]
    r = model.root
    width = model.label_counts[r]

    state = LagrangianState(lam=float(lam0))
    last = None
    x = None
    best_dual = (-np.inf, None)
    for n in range(1, max_iterations + 1):
        E, _, arg = kernels.map_pass(p.unary - state.lam * delta, p.pair, p.parent, p.order, p.child_ptr, p.child_idx)
        s = int(np.argmin(E[r, :width]))
        if E[r, s] == np.inf:
            state.stop_reason = "infeasible"
            break
        x = trace_layers(model, [arg], [None], [None], 0, s)
        h = hamming_to(x, prev_x)
        energy = energy_of(model, x)
        state.iteration = n
        state.trace.append((state.lam, energy, h))
        if h >= k and (state.best_feasible is None or energy < state.best_feasible.energy):
            state.best_feasible = Labeling(x, energy)
        dual = energy - state.lam * (h - k)
        if dual > best_dual[0]:
            best_dual = (dual, Labeling(x, energy))
        new_lam = max(0.0, state.lam + (k - h) / n)
        if last is not None and x == last[0] and state.lam == last[1]:
            state.stop_reason = "converged"
            break
        last = (x, state.lam)
        state.lam = new_lam
    else:
        state.stop_reason = "max_iterations"

    report = SolverReport(
        Status.NO_VALID,
        "divmbest",
        info={"lagrangian": state, "stop_reason": state.stop_reason, "selection": selection},
    )
    if x is not None:
        if selection == "dual":
            chosen = best_dual[1]
        elif selection == "feasible" and state.best_feasible is not None:
            chosen = state.best_feasible
        else:
            chosen = Labeling(x, energy_of(model, x))
        report.status = Status.SOLVED
        report.solutions = [chosen]
        report.hammings = [hamming_to(chosen.assignment, prev_x)]
    report.counters = {"iterations": state.iteration}
    report.runtime_ns = time.perf_counter_ns() - t0
    return report
