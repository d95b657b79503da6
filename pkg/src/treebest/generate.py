"""Seeded random tree models.

Topologies are uniform labelled trees decoded from random Prüfer sequences.
Randomness comes from numpy's PCG64; tree ``index`` of a run with ``seed``
draws from ``SeedSequence(seed, spawn_key=(index,))``, which is the same
stream as ``SeedSequence(seed).spawn(...)[index]``.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import TreeModel


@dataclass(frozen=True)
class RandomTreeConfig:
    node_count: int = 100
    label_count: int = 3
    potential_low: float = 0.0
    potential_high: float = 1.0
    seed: int = 0
    tree_count: int = 50

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.label_count < 1:
            raise ValueError("label_count must be >= 1")
        if not self.potential_low < self.potential_high:
            raise ValueError("potential_low must be < potential_high")
        if self.tree_count < 0:
            raise ValueError("tree_count must be >= 0")


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def prufer_decode(seq: Sequence[int], n: int) -> list[tuple[int, int]]:
    """Undirected edges of the labelled tree on ``n`` nodes encoded by ``seq``."""
    if n == 1:
        return []
    if len(seq) != n - 2:
        raise ValueError(f"Prüfer sequence for {n} nodes needs {n - 2} entries")
    degree = [1] * n
    for a in seq:
        degree[a] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for a in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, a))
        degree[a] -= 1
        if degree[a] == 1:
            heapq.heappush(leaves, a)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def random_topology(rng: np.random.Generator, n: int, root: int = 0) -> list[tuple[int, int]]:
    """Child -> parent edges of a uniform random tree, sorted by child."""
    seq = rng.integers(0, n, size=max(n - 2, 0)).tolist() if n > 2 else []
    undirected = prufer_decode(seq, n)
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in undirected:
        adj[a].append(b)
        adj[b].append(a)
    parent = [-1] * n
    seen = [False] * n
    seen[root] = True
    queue = deque([root])
    while queue:
        w = queue.popleft()
        for x in sorted(adj[w]):
            if not seen[x]:
                seen[x] = True
                parent[x] = w
                queue.append(x)
    return [(u, parent[u]) for u in range(n) if u != root]


def random_model(
    rng: np.random.Generator,
    node_count: int,
    labels: int | Sequence[int],
    low: float = 0.0,
    high: float = 1.0,
) -> TreeModel:
    """Random topology with i.i.d. uniform potentials on ``[low, high)``.

    ``labels`` is either one state count for all nodes or one per node.
    Unaries are drawn first (node order), then one table per edge.
    """
    edges = random_topology(rng, node_count)
    counts = [labels] * node_count if np.isscalar(labels) else list(labels)
    unary = [rng.uniform(low, high, size=c) for c in counts]
    pairwise = [rng.uniform(low, high, size=(counts[u], counts[v])) for u, v in edges]
    return TreeModel(tuple(counts), 0, tuple(edges), tuple(unary), tuple(pairwise))


def generate_tree(config: RandomTreeConfig, index: int) -> TreeModel:
    if not 0 <= index < config.tree_count:
        raise ValueError(f"tree index {index} outside 0..{config.tree_count - 1}")
    rng = tree_rng(config.seed, index)
    return random_model(rng, config.node_count, config.label_count, config.potential_low, config.potential_high)
