"""Pure-numpy min-sum kernels.

Every function loops over nodes in Python and vectorises over states.  The
numba backend in ``_numba.py`` performs the same floating point operations in
the same order, so both return bit-identical arrays.

Array conventions (``n`` nodes, ``L`` padded states):

* ``msg[u, s]``  -- best energy of the subtree of ``u`` sent to state ``s`` of
  ``parent[u]``; ``arg[u, s]`` is the minimising state of ``u``.
* ``jump[v, s]`` -- the stored optimum at ``(v, s)`` arrived via a layer jump.
* ``src[u, s]``  -- layer the message of child ``u`` came from when its parent
  sits in state ``s`` on the layer being computed.
"""
import numpy as np

INF = np.inf


def _send(pair, parent, v, Ev, msg, arg):
    if parent[v] < 0:
        return
    table = pair[v] + Ev[:, None]
    best = np.argmin(table, axis=0)
    arg[v] = best
    msg[v] = table[best, np.arange(table.shape[1])]


def map_pass(unary, pair, parent, order, child_ptr, child_idx):
    n, L = unary.shape
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    for v in order:
        kids = child_idx[child_ptr[v] : child_ptr[v + 1]]
        total = np.zeros(L)
        for u in kids:
            total = total + msg[u]
        E[v] = unary[v] + total
        _send(pair, parent, v, E[v], msg, arg)
    return E, msg, arg


def layer_step(unary, pair, parent, order, child_ptr, child_idx, E_prev, msg_base, allowed, layer):
    """One extra layer above ``E_prev``, at least one child from the new layer.

    ``allowed[v, s]`` permits the jump ``(v, s)`` from the layer below.  The
    other children cross over from the base layer 0 (``msg_base``).  Per
    state, every child takes the cheaper of its two messages (new layer on
    ties); when no child picked the new layer, the child with the smallest
    surplus is switched over.
    """
    n, L = unary.shape
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    jump = np.zeros((n, L), dtype=np.bool_)
    src = np.full((n, L), layer, dtype=np.int64)
    cols = np.arange(L)
    for v in order:
        kids = child_idx[child_ptr[v] : child_ptr[v + 1]]
        if kids.size:
            new = msg[kids]
            old = msg_base[kids]
            take = new <= old
            with np.errstate(invalid="ignore"):
                surplus = np.where(new == INF, INF, new - old)
            pick = np.argmin(surplus, axis=0)
            missing = ~take.any(axis=0)
            take[pick[missing], cols[missing]] = True
            total = np.zeros(L)
            for i in range(kids.size):
                total = total + np.where(take[i], new[i], old[i])
            step = unary[v] + total
            src[kids] = np.where(take, layer, 0)
        else:
            step = np.full(L, INF)
        hop = np.where(allowed[v], E_prev[v], INF)
        jump[v] = hop < step
        E[v] = np.where(jump[v], hop, step)
        _send(pair, parent, v, E[v], msg, arg)
    return E, msg, arg, jump, src


def accumulate_pass(unary, pair, parent, order, child_ptr, child_idx, node_alpha, edge_alpha):
    """Min-sum pass that also carries accumulated diversity per subtree.

    ``node_alpha`` has shape ``(J, n, L)`` and ``edge_alpha`` ``(J, n, L, L)``
    (indexed like ``pair``).  Among equal-energy child states the one whose
    smallest accumulator is largest wins, then the lowest index.
    """
    n, L = unary.shape
    J = node_alpha.shape[0]
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    acc = np.zeros((J, n, L))
    macc = np.zeros((J, n, L))
    cols = np.arange(L)
    for v in order:
        kids = child_idx[child_ptr[v] : child_ptr[v + 1]]
        total = np.zeros(L)
        atotal = np.zeros((J, L))
        for u in kids:
            total = total + msg[u]
            atotal = atotal + macc[:, u]
        E[v] = unary[v] + total
        acc[:, v] = node_alpha[:, v] + atotal
        if parent[v] < 0:
            continue
        table = pair[v] + E[v][:, None]
        cand = table == table.min(axis=0)
        gain = acc[:, v, :, None] + edge_alpha[:, v]
        score = np.where(cand, gain.min(axis=0), -INF)
        best = np.argmax(score, axis=0)
        arg[v] = best
        msg[v] = table[best, cols]
        macc[:, v] = gain[:, best, cols]
    return E, msg, arg, acc


def combine_admissible(mm, need):
    """Cheapest choice of source layer per child with capped jumps >= ``need``.

    ``mm[i, l, s]`` is the message of child ``i`` from layer ``l`` (layer
    ``l`` carries ``l`` jumps).  Returns the minimal sum per state and the
    chosen layer per child, shape ``(d, L)``.  Jump counts are capped at
    ``need``, so this is a knapsack over ``need + 1`` buckets rather than an
    enumeration of all layer combinations.
    """
    d, layers, L = mm.shape
    f = np.full((need + 1, L), INF)
    f[0] = 0.0
    back_j = np.zeros((d, need + 1, L), dtype=np.int64)
    back_l = np.zeros((d, need + 1, L), dtype=np.int64)
    for i in range(d):
        g = np.full((need + 1, L), INF)
        for j in range(need + 1):
            for l in range(layers):
                j2 = min(j + l, need)
                cand = f[j] + mm[i, l]
                better = cand < g[j2]
                g[j2] = np.where(better, cand, g[j2])
                back_j[i, j2] = np.where(better, j, back_j[i, j2])
                back_l[i, j2] = np.where(better, l, back_l[i, j2])
        f = g
    choice = np.zeros((d, L), dtype=np.int64)
    j = np.full(L, need)
    cols = np.arange(L)
    for i in range(d - 1, -1, -1):
        choice[i] = back_l[i, j, cols]
        j = back_j[i, j, cols]
    return f[need], choice


def klayer_step(unary, pair, parent, order, child_ptr, child_idx, E_prev, jumped_prev, msgs, allowed, layer):
    """Layer ``layer`` of the multi-layer diversity model.

    ``msgs`` stacks the messages of layers ``0 .. layer-1``.  Children may come
    from any layer up to ``layer`` as long as their jumps add up to ``layer``;
    a jump at ``(v, s)`` is refused when ``(v, s)`` was itself reached by a
    jump one layer down.
    """
    n, L = unary.shape
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    jump = np.zeros((n, L), dtype=np.bool_)
    src = np.full((n, L), layer, dtype=np.int64)
    for v in order:
        kids = child_idx[child_ptr[v] : child_ptr[v + 1]]
        if kids.size:
            mm = np.empty((kids.size, layer + 1, L))
            mm[:, :layer] = msgs[:layer, kids].transpose(1, 0, 2)
            mm[:, layer] = msg[kids]
            total, choice = combine_admissible(mm, layer)
            step = unary[v] + total
            src[kids] = choice
        else:
            step = np.full(L, INF)
        hop = np.where(allowed[v] & ~jumped_prev[v], E_prev[v], INF)
        jump[v] = hop < step
        E[v] = np.where(jump[v], hop, step)
        _send(pair, parent, v, E[v], msg, arg)
    return E, msg, arg, jump, src


def trace(args, jumps, srcs, parent, order, layer, state):
    """Assignment backtracked from the root in ``(layer, state)``.

    ``args``, ``jumps`` and ``srcs`` stack the per-layer arrays; their layer 0
    entries of ``jumps``/``srcs`` must be False/0.  Nodes are visited root
    first (reverse of ``order``).
    """
    n = parent.shape[0]
    x = np.zeros(n, dtype=np.int64)
    lay = np.zeros(n, dtype=np.int64)
    for v in order[::-1]:
        p = parent[v]
        if p < 0:
            l, s = layer, state
        else:
            l = srcs[lay[p], v, x[p]]
            s = args[l, v, x[p]]
        while l > 0 and jumps[l, v, s]:
            l -= 1
        x[v] = s
        lay[v] = l
    return x


def naive_mbest(unary, pair, parent, order, child_ptr, child_idx, root, M):
    """Whole naive layer stack: returns ``(X, count, steps)``.

    Row ``i < count`` of ``X`` is the ``i``-th solution; each new layer forbids
    the jump at the states of the solution found just before it.  ``steps``
    counts layer steps, including a final one that found nothing.
    """
    n, L = unary.shape
    X = np.zeros((M, n), dtype=np.int64)
    E, msg0, arg0 = map_pass(unary, pair, parent, order, child_ptr, child_idx)
    args = np.zeros((M, n, L), dtype=np.int64)
    jumps = np.zeros((M, n, L), dtype=np.bool_)
    srcs = np.zeros((M, n, L), dtype=np.int64)
    args[0] = arg0
    s = int(np.argmin(E[root]))
    if E[root, s] == INF:
        return X, 0, 0
    X[0] = trace(args[:1], jumps[:1], srcs[:1], parent, order, 0, s)
    count, steps = 1, 0
    rows = np.arange(n)
    while count < M:
        allowed = np.ones((n, L), dtype=np.bool_)
        allowed[rows, X[count - 1]] = False
        E, _, arg, jump, src = layer_step(unary, pair, parent, order, child_ptr, child_idx, E, msg0, allowed, count)
        steps += 1
        args[count], jumps[count], srcs[count] = arg, jump, src
        s = int(np.argmin(E[root]))
        if E[root, s] == INF:
            break
        X[count] = trace(args[: count + 1], jumps[: count + 1], srcs[: count + 1], parent, order, count, s)
        count += 1
    return X, count, steps
