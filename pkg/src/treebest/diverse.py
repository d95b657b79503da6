"""Approximate diverse next solutions.

Two heuristics that guarantee a minimum distance to earlier solutions but
not optimality:

* :func:`diverse_next_klayer` stacks ``k + 1`` layers with the same jump
  restriction and lets branching nodes combine children from different
  layers as long as their jumps add up.
* :func:`diverse_next_accumulate` uses two layers and carries the diversity
  of each subtree configuration along with its energy; a jump is only allowed
  once enough diversity has been collected below.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .dpcore import hamming_to, map_solve, message_pass, trace_layers
from .model import (
    InvalidModelError,
    Labeling,
    ParseError,
    TreeModel,
    _format,
    _Tokens,
    check_assignment,
    energy_of,
    require_valid,
)
from .report import SolverReport, Status

__all__ = [
    "DiversitySpec",
    "AdmissibleSet",
    "admissible_sets",
    "diverse_next_klayer",
    "diverse_next_accumulate",
    "diverse_m_accumulate",
    "parse_diversity",
    "write_diversity",
]


@dataclass(frozen=True, eq=False)
class DiversitySpec:
    """Per-node/state and per-edge diversity weights plus a threshold.

    ``edge_alpha[i]`` belongs to ``model.edges[i]`` and is indexed like the
    pairwise table.  ``None`` means all edge weights are zero.
    """

    node_alpha: tuple[np.ndarray, ...]
    threshold: float
    edge_alpha: Optional[tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "node_alpha", tuple(np.asarray(a, dtype=np.float64) for a in self.node_alpha))
        if self.edge_alpha is not None:
            object.__setattr__(
                self, "edge_alpha", tuple(np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in self.edge_alpha)
            )
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "_packed", {})
        object.__setattr__(self, "_checked", set())

    @classmethod
    def hamming(cls, previous: Labeling | Sequence[int], threshold: float, label_counts: Sequence[int]) -> "DiversitySpec":
        """Weight 1 for every state other than the previous one, 0 otherwise."""
        x = previous.assignment if isinstance(previous, Labeling) else tuple(previous)
        full = np.ones((len(label_counts), max(label_counts, default=1)))
        full[np.arange(len(x)), x] = 0.0
        return cls(tuple(full[v, :c] for v, c in enumerate(label_counts)), threshold)

    def check(self, model: TreeModel) -> None:
        """Raise unless the weights fit ``model`` and are finite and >= 0."""
        key = (model.label_counts, model.edges)
        if key in self._checked:
            return
        self._validate(model)
        self._checked.add(key)

    def _validate(self, model: TreeModel) -> None:
        if len(self.node_alpha) != model.node_count:
            raise InvalidModelError("one node_alpha table per node required")
        tables = list(self.node_alpha)
        for v, a in enumerate(self.node_alpha):
            if a.shape != (model.label_counts[v],):
                raise InvalidModelError(f"node_alpha {v} has shape {a.shape}")
        if self.edge_alpha is not None:
            if len(self.edge_alpha) != len(model.edges):
                raise InvalidModelError("one edge_alpha table per edge required")
            for (u, v), a in zip(model.edges, self.edge_alpha):
                if a.shape != (model.label_counts[u], model.label_counts[v]):
                    raise InvalidModelError(f"edge_alpha ({u}, {v}) has shape {a.shape}")
            tables += list(self.edge_alpha)
        flat = np.concatenate([a.ravel() for a in tables]) if tables else np.zeros(0)
        if not np.isfinite(flat).all() or (flat < 0).any():
            raise InvalidModelError("diversity weights must be finite and >= 0")
        if not math.isfinite(self.threshold) or self.threshold < 0:
            raise InvalidModelError("threshold must be finite and >= 0")

    def diversity_of(self, model: TreeModel, assignment: Sequence[int]) -> float:
        """Total diversity of a full assignment."""
        node, edge = self.packed(model)
        x = np.asarray(assignment, dtype=np.int64)
        kids = model.non_root
        return float(node[np.arange(x.size), x].sum() + edge[kids, x[kids], x[model.packed.parent[kids]]].sum())

    def packed(self, model: TreeModel) -> tuple[np.ndarray, np.ndarray]:
        """Weights padded like ``model.packed``: node ``(n, L)``, edge ``(n, L, L)`` by child."""
        n, L = model.packed.unary.shape
        key = (n, L, model.edges)
        if key not in self._packed:
            self._packed[key] = self._pack(model, n, L)
        return self._packed[key]

    def _pack(self, model: TreeModel, n: int, L: int) -> tuple[np.ndarray, np.ndarray]:
        node = np.zeros((n, L))
        for v, a in enumerate(self.node_alpha):
            node[v, : a.size] = a
        edge = np.zeros((n, L, L))
        if self.edge_alpha is not None:
            for (u, _), a in zip(model.edges, self.edge_alpha):
                edge[u, : a.shape[0], : a.shape[1]] = a
        return node, edge


@dataclass(frozen=True)
class AdmissibleSet:
    """Source layer (1-based) for each incoming edge of a branching node."""

    layers: tuple[int, ...]

    @property
    def jumps(self) -> int:
        return sum(l - 1 for l in self.layers)


@lru_cache(maxsize=None)
def admissible_sets(degree: int, target: int) -> tuple[AdmissibleSet, ...]:
    """All layer combinations reaching layer ``target`` from ``degree`` children.

    Enumerates ``(l_1, ..., l_d)`` with ``1 <= l_i <= target`` and
    ``sum(l_i - 1) >= target - 1``.  The solver does not use this list, it
    minimises over the same set with a knapsack; the enumeration is kept as
    the reference definition.
    """
    out = []
    for combo in itertools.product(range(1, target + 1), repeat=degree):
        if sum(l - 1 for l in combo) >= target - 1:
            out.append(AdmissibleSet(combo))
    return tuple(out)


def _hamming_mask(model: TreeModel, previous: Sequence[int]) -> np.ndarray:
    mask = np.ones(model.packed.unary.shape, dtype=np.bool_)
    mask[np.arange(model.node_count), np.asarray(previous)] = False
    return mask


def _check_previous(model: TreeModel, previous: Labeling) -> None:
    check_assignment(model, previous.assignment)
    if energy_of(model, previous.assignment) == np.inf:
        raise InvalidModelError("previous labeling has infinite energy")


def diverse_next_klayer(model: TreeModel, previous: Labeling, k: int) -> SolverReport:
    """Solution at Hamming distance >= ``k`` from ``previous`` via ``k + 1`` layers.

    A jump ``(v, s)`` needs ``s != previous[v]`` and is blocked when ``(v, s)``
    was itself entered by a jump, so every node contributes at most once.
    The block depends on the stored optimum only, which can cut off every
    valid path; the result is then ``NoValidSolution`` even if a solution
    exists.
    """
    if k < 1:
        raise InvalidModelError("k must be >= 1")
    require_valid(model)
    _check_previous(model, previous)
    t0 = time.perf_counter_ns()
    p = model.packed
    n, L = p.unary.shape
    table = message_pass(model)
    allowed = _hamming_mask(model, previous.assignment)

    msgs = np.full((k + 1, n, L), np.inf)
    msgs[0] = table.messages
    energies, args, jumps, srcs = [table.energies], [table.backpointers], [None], [None]
    jumped = np.zeros((n, L), dtype=np.bool_)
    for layer in range(1, k + 1):
        E, msg, arg, jump, src = kernels.klayer_step(
            p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx, energies[-1], jumped, msgs, allowed, layer
        )
        msgs[layer] = msg
        energies.append(E)
        args.append(arg)
        jumps.append(jump)
        srcs.append(src)
        jumped = jump

    r = model.root
    row = energies[-1][r, : model.label_counts[r]]
    s = int(np.argmin(row))
    x = trace_layers(model, args, jumps, srcs, k, s) if row[s] != np.inf else None
    report = SolverReport(Status.NO_VALID, "klayer", runtime_ns=time.perf_counter_ns() - t0)
    report.counters = {"layer1_passes": 1, "layer_steps": k}
    if x is not None:
        report.status = Status.SOLVED
        report.solutions = [Labeling(x, energy_of(model, x))]
        report.hammings = [hamming_to(x, [previous.assignment])]
    return report


def _accumulate_next(model: TreeModel, specs: Sequence[DiversitySpec]):
    """Two-layer pass whose jumps need every accumulator at its threshold.

    Returns the assignment or ``None``.
    """
    p = model.packed
    packed = [spec.packed(model) for spec in specs]
    node_alpha = np.stack([a for a, _ in packed])
    edge_alpha = np.stack([b for _, b in packed])
    E, msg, arg, acc = kernels.accumulate_pass(
        p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx, node_alpha, edge_alpha
    )
    thresholds = np.array([spec.threshold for spec in specs])
    allowed = (acc >= thresholds[:, None, None]).all(axis=0)
    E2, _, arg2, jump2, src2 = kernels.layer_step(
        p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx, E, msg, allowed, 1
    )
    r = model.root
    row = E2[r, : model.label_counts[r]]
    s = int(np.argmin(row))
    if row[s] == np.inf:
        return None
    return trace_layers(model, [arg, arg2], [None, jump2], [None, src2], 1, s)


def diverse_next_accumulate(
    model: TreeModel, spec: DiversitySpec, previous: Labeling | None = None
) -> SolverReport:
    """Solution whose total diversity under ``spec`` reaches ``spec.threshold``.

    Subtree configurations are chosen for energy alone (ties go to the larger
    accumulated diversity), so the result can be costlier than the best
    assignment meeting the threshold, or missing altogether.  ``previous`` is
    only used to report a Hamming distance.
    """
    require_valid(model)
    spec.check(model)
    t0 = time.perf_counter_ns()
    x = _accumulate_next(model, [spec])
    report = SolverReport(Status.NO_VALID, "accumulate", runtime_ns=time.perf_counter_ns() - t0)
    report.counters = {"layer1_passes": 1, "layer_steps": 1}
    if x is not None:
        report.status = Status.SOLVED
        report.solutions = [Labeling(x, energy_of(model, x))]
        report.hammings = [hamming_to(x, [previous.assignment]) if previous is not None else None]
        report.info["diversity"] = spec.diversity_of(model, x)
    return report


def diverse_m_accumulate(model: TreeModel, M: int, k: int) -> SolverReport:
    """Up to ``M`` solutions, pairwise at Hamming distance >= ``k``.

    Solution ``i`` is found with one Hamming accumulator per earlier solution.
    """
    if M < 1 or k < 1:
        raise InvalidModelError("M and k must be >= 1")
    t0 = time.perf_counter_ns()
    first = map_solve(model)
    if not first.solved:
        first.method = "accumulate"
        return first
    solutions = list(first.solutions)
    hammings: list[Optional[int]] = [None]
    status = Status.SOLVED
    while len(solutions) < M:
        specs = [DiversitySpec.hamming(sol, k, model.label_counts) for sol in solutions]
        x = _accumulate_next(model, specs)
        if x is None:
            status = Status.NO_VALID
            break
        previous = [sol.assignment for sol in solutions]
        solutions.append(Labeling(x, energy_of(model, x)))
        hammings.append(hamming_to(x, previous))
    return SolverReport(
        status,
        "accumulate",
        solutions,
        hammings,
        runtime_ns=time.perf_counter_ns() - t0,
        counters={"layer1_passes": len(solutions), "layer_steps": len(solutions) - 1},
    )


# -- diversity spec files ----------------------------------------------------


def write_diversity(spec: DiversitySpec, model: TreeModel) -> str:
    lines = ["DIVERSITY 1", _format(spec.threshold)]
    for v, a in enumerate(spec.node_alpha):
        lines.append(f"ALPHA {v}")
        lines.append(" ".join(_format(x) for x in a))
    if spec.edge_alpha is not None:
        for (u, v), a in zip(model.edges, spec.edge_alpha):
            lines.append(f"EDGE {u} {v}")
            for row in a:
                lines.append(" ".join(_format(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_diversity(text: str | bytes, model: TreeModel) -> DiversitySpec:
    """Read a diversity spec in the TREEMODEL token style.

    ``DIVERSITY 1``, the threshold, one ``ALPHA <v>`` block per node, then
    optionally one ``EDGE <u> <v>`` block per model edge in either
    orientation.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    toks = _Tokens(text)
    toks.keyword("DIVERSITY")
    tok, line = toks.next("format version")
    if tok != "1":
        raise ParseError(f"unsupported version {tok!r}", line)
    threshold = toks.real("threshold")
    n = model.node_count
    alpha: list[np.ndarray | None] = [None] * n
    for _ in range(n):
        line = toks.keyword("ALPHA")
        v = toks.int("node index")
        if not 0 <= v < n or alpha[v] is not None:
            raise ParseError(f"bad or repeated ALPHA index {v}", line)
        alpha[v] = np.array([toks.real(f"alpha of node {v}") for _ in range(model.label_counts[v])])
    edge_alpha = None
    if toks.pos < len(toks.items):
        index = {e: i for i, e in enumerate(model.edges)}
        tables: list[np.ndarray | None] = [None] * len(model.edges)
        for _ in range(len(model.edges)):
            line = toks.keyword("EDGE")
            u = toks.int("edge tail")
            v = toks.int("edge head")
            if (u, v) in index:
                i, flip = index[(u, v)], False
            elif (v, u) in index:
                i, flip = index[(v, u)], True
            else:
                raise ParseError(f"({u}, {v}) is not an edge of the model", line)
            if tables[i] is not None:
                raise ParseError(f"repeated EDGE block for ({u}, {v})", line)
            a = np.array(
                [toks.real("edge alpha") for _ in range(model.label_counts[u] * model.label_counts[v])]
            ).reshape(model.label_counts[u], model.label_counts[v])
            tables[i] = a.T.copy() if flip else a
        if toks.pos != len(toks.items):
            tok, line = toks.items[toks.pos]
            raise ParseError(f"trailing token {tok!r}", line)
        edge_alpha = tuple(tables)
    spec = DiversitySpec(tuple(alpha), threshold, edge_alpha)
    try:
        spec.check(model)
    except InvalidModelError as exc:
        raise ParseError(str(exc), 1) from None
    return spec
