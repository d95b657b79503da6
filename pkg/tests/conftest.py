import numpy as np
import pytest
from hypothesis import strategies as st

from treebest.generate import prufer_decode, random_model
from treebest.model import TreeModel, parse_model

TOL = 1e-9


def term_sum(model, x):
    """Energy of ``x`` added up term by term, independent of the package."""
    total = 0.0
    for v in range(model.node_count):
        total += float(model.unary[v][x[v]])
    for (u, v), table in zip(model.edges, model.pairwise):
        total += float(table[x[u], x[v]])
    return total


def small_model(seed, n_range=(4, 10), l_range=(2, 4), mixed=True):
    """Seeded random tree with random size and label counts."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    if mixed:
        labels = [int(c) for c in rng.integers(l_range[0], l_range[1] + 1, size=n)]
    else:
        labels = int(rng.integers(l_range[0], l_range[1] + 1))
    return random_model(rng, n, labels, 0.0, 1.0)


def capped(model, cap=3000):
    return model.state_space_size <= cap


@st.composite
def tree_models(draw, max_nodes=6, max_labels=3, allow_inf=False, integer=False):
    n = draw(st.integers(1, max_nodes))
    labels = [draw(st.integers(1, max_labels)) for _ in range(n)]
    if n > 2:
        seq = draw(st.lists(st.integers(0, n - 1), min_size=n - 2, max_size=n - 2))
        undirected = prufer_decode(seq, n)
    elif n == 2:
        undirected = [(0, 1)]
    else:
        undirected = []
    root = draw(st.integers(0, n - 1))
    # orient toward the root
    adj = {v: [] for v in range(n)}
    for a, b in undirected:
        adj[a].append(b)
        adj[b].append(a)
    parent = {root: -1}
    stack = [root]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in parent:
                parent[w] = v
                stack.append(w)
    edges = sorted((u, p) for u, p in parent.items() if p >= 0)
    if integer:
        value = st.integers(0, 3).map(float)
    else:
        value = st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False)
    if allow_inf:
        value = st.one_of(value, st.just(float("inf")))

    def table(shape):
        flat = draw(st.lists(value, min_size=int(np.prod(shape)), max_size=int(np.prod(shape))))
        return np.array(flat, dtype=float).reshape(shape)

    unary = [table((c,)) for c in labels]
    pairwise = [table((labels[u], labels[v])) for u, v in edges]
    return TreeModel(labels, root, edges, unary, pairwise)


def single_node(values):
    return TreeModel((len(values),), 0, (), (np.array(values, dtype=float),), ())


def zero_chain(n, labels=2, root=0):
    """Path 0-1-...-(n-1) with all potentials zero, oriented toward ``root``."""
    edges = []
    for v in range(n):
        if v < root:
            edges.append((v, v + 1))
        elif v > root:
            edges.append((v, v - 1))
    return TreeModel(
        (labels,) * n,
        root,
        tuple(sorted(edges)),
        tuple(np.zeros(labels) for _ in range(n)),
        tuple(np.zeros((labels, labels)) for _ in edges),
    )


# Independent leaves a=0, b=1 under root c=2.  The 4th-best assignment flips
# both leaves, which no layer ordering can reach.
STAR_LEAVES = TreeModel(
    (2, 2, 2),
    2,
    ((0, 2), (1, 2)),
    (np.array([0.0, 1.0]), np.array([0.0, 2.0]), np.array([0.0, 10.0])),
    (np.zeros((2, 2)), np.zeros((2, 2))),
)

# Path 1-0-2 on which the naive layer order misses the 4th best (2.85)
# while the exact mode finds it.
NAIVE_CHAIN = parse_model(
    """TREEMODEL 1
3 0
2 2 2
UNARY 0
0.59 0.39
UNARY 1
0.62 0.66
UNARY 2
0.01 0.78
EDGE 1 0
1.0 0.51
0.11 0.89
EDGE 2 0
0.63 0.37
0.72 0.93
"""
)

# Path 0-1-3-2: with k=2 the k-layer method blocks itself, the oracle finds
# (0, 0, 0, 0) at energy 2.8.
KLAYER_BLOCKED = parse_model(
    """TREEMODEL 1
4 0
2 2 2 2
UNARY 0
0.2 0.2
UNARY 1
0.3 0.2
UNARY 2
0.7 0.1
UNARY 3
0.9 0.9
EDGE 1 0
0.0 0.5
0.1 0.3
EDGE 2 3
0.4 0.5
0.5 0.9
EDGE 3 1
0.3 0.2
0.7 0.9
"""
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
