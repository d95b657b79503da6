"""numba versions of the min-sum kernels in ``_numpy.py``.

Same signatures, same tie-breaking, same order of floating point additions.
"""
import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def _send(pair, parent, v, E, msg, arg):
    p = parent[v]
    if p < 0:
        return
    L = E.shape[1]
    for s in range(L):
        best = 0
        val = pair[v, 0, s] + E[v, 0]
        for x in range(1, L):
            cand = pair[v, x, s] + E[v, x]
            if cand < val:
                val = cand
                best = x
        msg[v, s] = val
        arg[v, s] = best


@njit(cache=True)
def map_pass(unary, pair, parent, order, child_ptr, child_idx):
    n, L = unary.shape
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    for v in order:
        for s in range(L):
            total = 0.0
            for k in range(child_ptr[v], child_ptr[v + 1]):
                total = total + msg[child_idx[k], s]
            E[v, s] = unary[v, s] + total
        _send(pair, parent, v, E, msg, arg)
    return E, msg, arg


@njit(cache=True)
def layer_step(unary, pair, parent, order, child_ptr, child_idx, E_prev, msg_base, allowed, layer):
    n, L = unary.shape
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    jump = np.zeros((n, L), dtype=np.bool_)
    src = np.full((n, L), layer, dtype=np.int64)
    for v in order:
        lo = child_ptr[v]
        hi = child_ptr[v + 1]
        for s in range(L):
            if hi > lo:
                any_new = False
                for k in range(lo, hi):
                    u = child_idx[k]
                    if msg[u, s] <= msg_base[u, s]:
                        src[u, s] = layer
                        any_new = True
                    else:
                        src[u, s] = 0
                if not any_new:
                    pick = -1
                    best = INF
                    for k in range(lo, hi):
                        u = child_idx[k]
                        if msg[u, s] == INF:
                            surplus = INF
                        else:
                            surplus = msg[u, s] - msg_base[u, s]
                        if pick < 0 or surplus < best:
                            best = surplus
                            pick = u
                    src[pick, s] = layer
                total = 0.0
                for k in range(lo, hi):
                    u = child_idx[k]
                    if src[u, s] == layer:
                        total = total + msg[u, s]
                    else:
                        total = total + msg_base[u, s]
                step = unary[v, s] + total
            else:
                step = INF
            hop = E_prev[v, s] if allowed[v, s] else INF
            if hop < step:
                jump[v, s] = True
                E[v, s] = hop
            else:
                E[v, s] = step
        _send(pair, parent, v, E, msg, arg)
    return E, msg, arg, jump, src


@njit(cache=True)
def accumulate_pass(unary, pair, parent, order, child_ptr, child_idx, node_alpha, edge_alpha):
    n, L = unary.shape
    J = node_alpha.shape[0]
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    acc = np.zeros((J, n, L))
    macc = np.zeros((J, n, L))
    for v in order:
        lo = child_ptr[v]
        hi = child_ptr[v + 1]
        for s in range(L):
            total = 0.0
            for k in range(lo, hi):
                total = total + msg[child_idx[k], s]
            E[v, s] = unary[v, s] + total
            for j in range(J):
                a = 0.0
                for k in range(lo, hi):
                    a = a + macc[j, child_idx[k], s]
                acc[j, v, s] = node_alpha[j, v, s] + a
        if parent[v] < 0:
            continue
        for s in range(L):
            low = INF
            for x in range(L):
                t = pair[v, x, s] + E[v, x]
                if t < low:
                    low = t
            best = -1
            best_score = -INF
            for x in range(L):
                t = pair[v, x, s] + E[v, x]
                if t != low:
                    continue
                score = INF
                for j in range(J):
                    g = acc[j, v, x] + edge_alpha[j, v, x, s]
                    if g < score:
                        score = g
                if best < 0 or score > best_score:
                    best = x
                    best_score = score
            arg[v, s] = best
            msg[v, s] = pair[v, best, s] + E[v, best]
            for j in range(J):
                macc[j, v, s] = acc[j, v, best] + edge_alpha[j, v, best, s]
    return E, msg, arg, acc


@njit(cache=True)
def _combine_into(mm, d, need, L, f, g, back_j, back_l, total, choice):
    for s in range(L):
        for j in range(need + 1):
            f[j] = INF
        f[0] = 0.0
        for i in range(d):
            for j in range(need + 1):
                g[j] = INF
                back_j[i, j] = 0
                back_l[i, j] = 0
            for j in range(need + 1):
                for l in range(mm.shape[1]):
                    j2 = min(j + l, need)
                    cand = f[j] + mm[i, l, s]
                    if cand < g[j2]:
                        g[j2] = cand
                        back_j[i, j2] = j
                        back_l[i, j2] = l
            for j in range(need + 1):
                f[j] = g[j]
        total[s] = f[need]
        j = need
        for i in range(d - 1, -1, -1):
            choice[i, s] = back_l[i, j]
            j = back_j[i, j]


@njit(cache=True)
def combine_admissible(mm, need):
    d, layers, L = mm.shape
    f = np.empty(need + 1)
    g = np.empty(need + 1)
    back_j = np.zeros((d, need + 1), dtype=np.int64)
    back_l = np.zeros((d, need + 1), dtype=np.int64)
    total = np.empty(L)
    choice = np.zeros((d, L), dtype=np.int64)
    _combine_into(mm, d, need, L, f, g, back_j, back_l, total, choice)
    return total, choice


@njit(cache=True)
def klayer_step(unary, pair, parent, order, child_ptr, child_idx, E_prev, jumped_prev, msgs, allowed, layer):
    n, L = unary.shape
    E = np.full((n, L), INF)
    msg = np.full((n, L), INF)
    arg = np.zeros((n, L), dtype=np.int64)
    jump = np.zeros((n, L), dtype=np.bool_)
    src = np.full((n, L), layer, dtype=np.int64)
    maxd = 0
    for v in range(n):
        maxd = max(maxd, child_ptr[v + 1] - child_ptr[v])
    mm = np.empty((max(maxd, 1), layer + 1, L))
    f = np.empty(layer + 1)
    g = np.empty(layer + 1)
    back_j = np.zeros((max(maxd, 1), layer + 1), dtype=np.int64)
    back_l = np.zeros((max(maxd, 1), layer + 1), dtype=np.int64)
    total = np.empty(L)
    choice = np.zeros((max(maxd, 1), L), dtype=np.int64)
    for v in order:
        lo = child_ptr[v]
        d = child_ptr[v + 1] - lo
        if d > 0:
            for i in range(d):
                u = child_idx[lo + i]
                for l in range(layer):
                    for s in range(L):
                        mm[i, l, s] = msgs[l, u, s]
                for s in range(L):
                    mm[i, layer, s] = msg[u, s]
            _combine_into(mm[:d], d, layer, L, f, g, back_j, back_l, total, choice)
            for i in range(d):
                u = child_idx[lo + i]
                for s in range(L):
                    src[u, s] = choice[i, s]
        for s in range(L):
            step = unary[v, s] + total[s] if d > 0 else INF
            hop = E_prev[v, s] if (allowed[v, s] and not jumped_prev[v, s]) else INF
            if hop < step:
                jump[v, s] = True
                E[v, s] = hop
            else:
                E[v, s] = step
        _send(pair, parent, v, E, msg, arg)
    return E, msg, arg, jump, src


@njit(cache=True)
def trace(args, jumps, srcs, parent, order, layer, state):
    n = parent.shape[0]
    x = np.zeros(n, dtype=np.int64)
    lay = np.zeros(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        v = order[i]
        p = parent[v]
        if p < 0:
            l = layer
            s = state
        else:
            l = srcs[lay[p], v, x[p]]
            s = args[l, v, x[p]]
        while l > 0 and jumps[l, v, s]:
            l -= 1
        x[v] = s
        lay[v] = l
    return x


@njit(cache=True)
def naive_mbest(unary, pair, parent, order, child_ptr, child_idx, root, M):
    n, L = unary.shape
    X = np.zeros((M, n), dtype=np.int64)
    E, msg0, arg0 = map_pass(unary, pair, parent, order, child_ptr, child_idx)
    args = np.zeros((M, n, L), dtype=np.int64)
    jumps = np.zeros((M, n, L), dtype=np.bool_)
    srcs = np.zeros((M, n, L), dtype=np.int64)
    args[0] = arg0
    s = np.argmin(E[root])
    if E[root, s] == INF:
        return X, 0, 0
    X[0] = trace(args[:1], jumps[:1], srcs[:1], parent, order, 0, s)
    count = 1
    steps = 0
    while count < M:
        allowed = np.ones((n, L), dtype=np.bool_)
        for v in range(n):
            allowed[v, X[count - 1, v]] = False
        E, _, arg, jump, src = layer_step(unary, pair, parent, order, child_ptr, child_idx, E, msg0, allowed, count)
        steps += 1
        args[count] = arg
        jumps[count] = jump
        srcs[count] = src
        s = np.argmin(E[root])
        if E[root, s] == INF:
            break
        X[count] = trace(args[: count + 1], jumps[: count + 1], srcs[: count + 1], parent, order, count, s)
        count += 1
    return X, count, steps
