"""Tree-structured discrete energy models.

A :class:`TreeModel` stores one unary table per node and one pairwise table
per edge.  Edges are kept child -> parent, so the model is an arborescence
pointing at ``root``.  Energies use ``math.inf`` for forbidden states; NaN and
negative infinity are rejected by :func:`validate`.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "TreeModel",
    "Labeling",
    "Violation",
    "ValidationResult",
    "InvalidModelError",
    "ParseError",
    "Packed",
    "validate",
    "energy_of",
    "energies_of",
    "parse_model",
    "write_model",
    "load_model",
]

INF = math.inf


class InvalidModelError(ValueError):
    """Raised when a solver receives a model or labeling it cannot use."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Violation(NamedTuple):
    kind: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


class Packed(NamedTuple):
    """Padded array view of a model, the input format of the DP kernels.

    ``pair[u]`` is the table of the edge from ``u`` to ``parent[u]`` with rows
    indexed by the state of ``u``.  Unused padding entries hold ``inf``.
    """

    labels: np.ndarray  # (n,) int64
    unary: np.ndarray  # (n, L) float64
    pair: np.ndarray  # (n, L, L) float64
    parent: np.ndarray  # (n,) int64, -1 at the root
    order: np.ndarray  # (n,) int64, leaves first, root last
    child_ptr: np.ndarray  # (n + 1,) int64
    child_idx: np.ndarray  # (n - 1,) int64


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Rooted tree of discrete variables with unary and pairwise energies.

    Parameters
    ----------
    label_counts : sequence of int
        Number of states of each node.
    root : int
        Index of the root node.
    edges : sequence of (child, parent) pairs
        ``len(label_counts) - 1`` directed edges pointing toward ``root``.
    unary : sequence of 1-d arrays
        ``unary[v]`` has length ``label_counts[v]``.
    pairwise : sequence of 2-d arrays
        ``pairwise[i]`` belongs to ``edges[i] = (u, v)`` and has shape
        ``(label_counts[u], label_counts[v])``.
    """

    label_counts: tuple[int, ...]
    root: int
    edges: tuple[tuple[int, int], ...]
    unary: tuple[np.ndarray, ...]
    pairwise: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "label_counts", tuple(int(x) for x in self.label_counts))
        object.__setattr__(self, "root", int(self.root))
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        unary = tuple(np.array(t, dtype=np.float64).reshape(-1) for t in self.unary)
        pairwise = tuple(np.atleast_2d(np.array(t, dtype=np.float64)) for t in self.pairwise)
        for arr in unary + pairwise:
            arr.setflags(write=False)
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "pairwise", pairwise)

    @property
    def node_count(self) -> int:
        return len(self.label_counts)

    @property
    def state_space_size(self) -> int:
        return math.prod(self.label_counts)

    def __eq__(self, other):
        if not isinstance(other, TreeModel):
            return NotImplemented
        return (
            self.label_counts == other.label_counts
            and self.root == other.root
            and self.edges == other.edges
            and len(self.unary) == len(other.unary)
            and len(self.pairwise) == len(other.pairwise)
            and all(np.array_equal(a, b) for a, b in zip(self.unary, other.unary))
            and all(
                a.shape == b.shape and np.array_equal(a, b)
                for a, b in zip(self.pairwise, other.pairwise)
            )
        )

    __hash__ = object.__hash__

    @cached_property
    def validation(self) -> "ValidationResult":
        return validate(self)

    @cached_property
    def parents(self) -> np.ndarray:
        parent = np.full(self.node_count, -1, dtype=np.int64)
        for u, v in self.edges:
            parent[u] = v
        return parent

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            kids[v].append(u)
        return tuple(tuple(sorted(k)) for k in kids)

    @cached_property
    def order(self) -> np.ndarray:
        """Topological order by repeated leaf stripping (leaves first, root last)."""
        n = self.node_count
        pending = np.array([len(c) for c in self.children], dtype=np.int64)
        queue = deque(v for v in range(n) if pending[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            p = self.parents[v]
            if p >= 0:
                pending[p] -= 1
                if pending[p] == 0:
                    queue.append(int(p))
        return np.array(order, dtype=np.int64)

    @cached_property
    def packed(self) -> Packed:
        n = self.node_count
        width = max(self.label_counts)
        unary = np.full((n, width), INF)
        for v, table in enumerate(self.unary):
            unary[v, : table.size] = table
        pair = np.full((n, width, width), INF)
        for (u, v), table in zip(self.edges, self.pairwise):
            pair[u, : table.shape[0], : table.shape[1]] = table
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        child_ptr[1:] = np.cumsum([len(c) for c in self.children])
        child_idx = np.array([u for c in self.children for u in c], dtype=np.int64)
        return Packed(
            labels=np.array(self.label_counts, dtype=np.int64),
            unary=unary,
            pair=pair,
            parent=self.parents,
            order=self.order,
            child_ptr=child_ptr,
            child_idx=child_idx,
        )

    @cached_property
    def node_index(self) -> np.ndarray:
        return np.arange(self.node_count)

    @cached_property
    def non_root(self) -> np.ndarray:
        """Every node except the root, ascending."""
        return np.flatnonzero(self.parents >= 0)

    def edge_table(self, child: int) -> np.ndarray:
        """Pairwise table of the edge leaving ``child`` (rows: child state)."""
        return self.pairwise[self._edge_index[child]]

    @cached_property
    def _edge_index(self) -> dict[int, int]:
        return {u: i for i, (u, _) in enumerate(self.edges)}

    def with_unary(self, unary: Sequence[np.ndarray]) -> "TreeModel":
        return TreeModel(self.label_counts, self.root, self.edges, tuple(unary), self.pairwise)


@dataclass(frozen=True)
class Labeling:
    """A full state assignment together with its energy."""

    assignment: tuple[int, ...]
    energy: float

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(map(int, self.assignment)))
        object.__setattr__(self, "energy", float(self.energy))

    def __len__(self):
        return len(self.assignment)

    def as_array(self) -> np.ndarray:
        return np.array(self.assignment, dtype=np.int64)

    @classmethod
    def of(cls, model: TreeModel, assignment: Sequence[int]) -> "Labeling":
        return cls(tuple(assignment), energy_of(model, assignment))


def validate(model: TreeModel) -> ValidationResult:
    """Check structure and tables; violations are returned, never raised."""
    out: list[Violation] = []
    n = model.node_count
    if n < 1:
        return ValidationResult((Violation("empty", "model has no nodes"),))
    for v, count in enumerate(model.label_counts):
        if count < 1:
            out.append(Violation("label_count", f"node {v} has {count} states"))
    if not 0 <= model.root < n:
        out.append(Violation("root", f"root {model.root} out of range"))
        return ValidationResult(tuple(out))

    edges_ok = True
    for u, v in model.edges:
        if not (0 <= u < n and 0 <= v < n):
            out.append(Violation("index", f"edge ({u}, {v}) references a missing node"))
            edges_ok = False
        elif u == v:
            out.append(Violation("cycle", f"self loop at node {u}"))
            edges_ok = False
    if len(model.edges) != n - 1:
        out.append(Violation("edge_count", f"expected {n - 1} edges, found {len(model.edges)}"))

    if edges_ok:
        outdeg = [0] * n
        for u, _ in model.edges:
            outdeg[u] += 1
        if outdeg[model.root]:
            out.append(Violation("cycle", f"root {model.root} has an outgoing edge"))
        for v in range(n):
            if v != model.root and outdeg[v] != 1:
                out.append(Violation("out_degree", f"node {v} has {outdeg[v]} outgoing edges"))
        if all(outdeg[v] == 1 for v in range(n) if v != model.root):
            parent = {u: v for u, v in model.edges}
            pending = [0] * n
            for u, v in model.edges:
                pending[v] += 1
            queue = deque(v for v in range(n) if pending[v] == 0)
            stripped = 0
            while queue:
                v = queue.popleft()
                stripped += 1
                if v in parent:
                    p = parent[v]
                    pending[p] -= 1
                    if pending[p] == 0:
                        queue.append(p)
            if stripped < n:
                out.append(Violation("cycle", f"{n - stripped} nodes lie on a cycle and never reach the root"))

    if len(model.unary) != n:
        out.append(Violation("dimension", f"expected {n} unary tables, found {len(model.unary)}"))
    else:
        for v, table in enumerate(model.unary):
            if table.shape != (model.label_counts[v],):
                out.append(Violation("dimension", f"unary {v} has shape {table.shape}"))
            _check_values(table, f"unary {v}", out)
    if len(model.pairwise) != len(model.edges):
        out.append(
            Violation("dimension", f"{len(model.edges)} edges but {len(model.pairwise)} pairwise tables")
        )
    elif edges_ok:
        for (u, v), table in zip(model.edges, model.pairwise):
            want = (model.label_counts[u], model.label_counts[v])
            if table.shape != want:
                out.append(Violation("dimension", f"edge ({u}, {v}) table {table.shape}, expected {want}"))
            _check_values(table, f"edge ({u}, {v})", out)
    return ValidationResult(tuple(out))


def _check_values(table: np.ndarray, what: str, out: list[Violation]) -> None:
    if np.isnan(table).any():
        out.append(Violation("value", f"{what} contains NaN"))
    if np.isneginf(table).any():
        out.append(Violation("value", f"{what} contains -inf"))


def require_valid(model: TreeModel) -> None:
    result = model.validation
    if not result.ok:
        raise InvalidModelError("; ".join(v.message for v in result.violations))


def check_assignment(model: TreeModel, assignment: Sequence[int]) -> None:
    if len(assignment) != model.node_count:
        raise InvalidModelError(f"assignment has {len(assignment)} entries, model has {model.node_count} nodes")
    x = np.asarray(assignment)
    bad = np.flatnonzero((x < 0) | (x >= model.packed.labels))
    if bad.size:
        v = int(bad[0])
        raise InvalidModelError(f"state {x[v]} out of range at node {v}")


def energy_of(model: TreeModel, assignment: Sequence[int]) -> float:
    """Sum of unary and pairwise energies of one assignment."""
    check_assignment(model, assignment)
    return traced_energy(model, np.asarray(assignment, dtype=np.int64))


def traced_energy(model: TreeModel, x: np.ndarray) -> float:
    """``energy_of`` without the range check, for int64 arrays a solver produced."""
    return float(traced_energies(model, x[None])[0])


def traced_energies(model: TreeModel, X: np.ndarray) -> np.ndarray:
    """``traced_energy`` of every row of ``X``.

    Terms are added strictly left to right (``cumsum``), so a row's energy
    does not depend on how many rows were evaluated together.
    """
    p = model.packed
    kids = model.non_root
    terms = np.concatenate((p.unary[model.node_index, X], p.pair[kids, X[:, kids], X[:, p.parent[kids]]]), axis=1)
    return np.cumsum(terms, axis=1)[:, -1]


def energies_of(model: TreeModel, assignments: np.ndarray) -> np.ndarray:
    """Vectorised :func:`energy_of` over the rows of an ``(m, n)`` int array."""
    x = np.asarray(assignments, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != model.node_count:
        raise InvalidModelError(f"expected shape (m, {model.node_count}), got {x.shape}")
    labels = np.array(model.label_counts)
    if x.size and ((x < 0).any() or (x >= labels).any()):
        raise InvalidModelError("state index out of range")
    total = np.zeros(x.shape[0])
    for v, table in enumerate(model.unary):
        total += table[x[:, v]]
    for (u, v), table in zip(model.edges, model.pairwise):
        total += table[x[:, u], x[:, v]]
    return total


# -- TREEMODEL text format ---------------------------------------------------

MAGIC = "TREEMODEL"
VERSION = "1"


def _format(value: float) -> str:
    if value == INF:
        return "inf"
    return repr(float(value))


def write_model(model: TreeModel) -> str:
    lines = [
        f"{MAGIC} {VERSION}",
        f"{model.node_count} {model.root}",
        " ".join(str(c) for c in model.label_counts),
    ]
    for v, table in enumerate(model.unary):
        lines.append(f"UNARY {v}")
        lines.append(" ".join(_format(x) for x in table))
    for (u, v), table in zip(model.edges, model.pairwise):
        lines.append(f"EDGE {u} {v}")
        for row in table:
            lines.append(" ".join(_format(x) for x in row))
    return "\n".join(lines) + "\n"


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            for tok in raw.split("#", 1)[0].split():
                self.items.append((tok, lineno))
        self.pos = 0

    @property
    def line(self) -> int:
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else 1

    def next(self, what: str) -> tuple[str, int]:
        if self.pos >= len(self.items):
            raise ParseError(f"unexpected end of input, expected {what}", self.line)
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def int(self, what: str) -> int:
        tok, line = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected integer {what}, found {tok!r}", line) from None

    def real(self, what: str) -> float:
        tok, line = self.next(what)
        try:
            value = float(tok)
        except ValueError:
            raise ParseError(f"expected number {what}, found {tok!r}", line) from None
        if math.isnan(value) or value == -INF:
            raise ParseError(f"{what} must be finite or inf, found {tok!r}", line)
        return value

    def keyword(self, word: str) -> int:
        tok, line = self.next(word)
        if tok != word:
            raise ParseError(f"expected {word!r}, found {tok!r}", line)
        return line


def parse_model(text: str | bytes) -> TreeModel:
    """Parse a TREEMODEL document; edges may come in either orientation."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    toks = _Tokens(text)
    toks.keyword(MAGIC)
    tok, line = toks.next("format version")
    if tok != VERSION:
        raise ParseError(f"unsupported version {tok!r}", line)
    n = toks.int("node count")
    if n < 1:
        raise ParseError("node count must be positive", toks.items[toks.pos - 1][1])
    root = toks.int("root")
    if not 0 <= root < n:
        raise ParseError(f"root {root} out of range", toks.items[toks.pos - 1][1])
    labels = []
    for v in range(n):
        count = toks.int(f"label count of node {v}")
        if count < 1:
            raise ParseError(f"node {v} needs at least one state", toks.items[toks.pos - 1][1])
        labels.append(count)

    unary: list[np.ndarray | None] = [None] * n
    for _ in range(n):
        line = toks.keyword("UNARY")
        v = toks.int("node index")
        if not 0 <= v < n or unary[v] is not None:
            raise ParseError(f"bad or repeated UNARY index {v}", line)
        unary[v] = np.array([toks.real(f"unary entry of node {v}") for _ in range(labels[v])])

    raw_edges = []
    for _ in range(n - 1):
        line = toks.keyword("EDGE")
        u = toks.int("edge tail")
        v = toks.int("edge head")
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"edge ({u}, {v}) references a missing node", line)
        table = np.array(
            [toks.real(f"pairwise entry of edge ({u}, {v})") for _ in range(labels[u] * labels[v])]
        ).reshape(labels[u], labels[v])
        raw_edges.append((u, v, table, line))
    if toks.pos != len(toks.items):
        tok, line = toks.items[toks.pos]
        raise ParseError(f"trailing token {tok!r}", line)

    edges, tables = _orient(raw_edges, n, root)
    model = TreeModel(tuple(labels), root, tuple(edges), tuple(unary), tuple(tables))
    result = validate(model)
    if not result.ok:
        raise ParseError("; ".join(v.message for v in result.violations), raw_edges[0][3] if raw_edges else 2)
    return model


def _orient(raw_edges, n: int, root: int):
    """Point every edge toward ``root``; non-tree edges are left as written."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, (u, v, _, _) in enumerate(raw_edges):
        adj[u].append(i)
        adj[v].append(i)
    parent = [-2] * n
    parent[root] = -1
    queue = deque([root])
    tree_edge = [False] * len(raw_edges)
    while queue:
        w = queue.popleft()
        for i in adj[w]:
            u, v = raw_edges[i][:2]
            other = v if u == w else u
            if parent[other] == -2:
                parent[other] = w
                tree_edge[i] = True
                queue.append(other)
    edges, tables = [], []
    for i, (u, v, table, _) in enumerate(raw_edges):
        if tree_edge[i] and parent[v] == u:
            edges.append((v, u))
            tables.append(table.T.copy())
        else:
            edges.append((u, v))
            tables.append(table)
    return edges, tables


def load_model(path) -> TreeModel:
    with open(path, "rb") as fh:
        return parse_model(fh.read())
