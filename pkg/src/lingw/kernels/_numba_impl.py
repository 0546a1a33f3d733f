"""numba-compiled inner loops.

Every function here has a twin in ``_numpy_impl`` with the same pivoting and
tie-breaking rules; the two are required to agree exactly.
"""

import numpy as np
from numba import njit

from ._numpy_impl import FPS_TIE_RTOL


@njit(cache=True)
def _northwest_corner(a, b, bi, bj, flow):
    n = a.shape[0]
    m = b.shape[0]
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for e in range(n + m - 1):
        x = min(ra[i], rb[j])
        bi[e] = i
        bj[e] = j
        flow[e] = x
        ra[i] -= x
        rb[j] -= x
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1


@njit(cache=True)
def _tree_potentials(C, n, m, bi, bj, adj_ptr, adj_node, adj_edge, parent, pedge, depth, pot):
    nodes = n + m
    ne = n + m - 1
    adj_ptr[:] = 0
    for e in range(ne):
        adj_ptr[bi[e] + 1] += 1
        adj_ptr[n + bj[e] + 1] += 1
    for k in range(nodes):
        adj_ptr[k + 1] += adj_ptr[k]
    fill = adj_ptr[:nodes].copy()
    for e in range(ne):
        r = bi[e]
        c = n + bj[e]
        adj_node[fill[r]] = c
        adj_edge[fill[r]] = e
        fill[r] += 1
        adj_node[fill[c]] = r
        adj_edge[fill[c]] = e
        fill[c] += 1
    queue = np.empty(nodes, np.int64)
    seen = np.zeros(nodes, np.bool_)
    queue[0] = 0
    seen[0] = True
    parent[0] = -1
    pedge[0] = -1
    depth[0] = 0
    pot[0] = 0.0
    head = 0
    tail = 1
    while head < tail:
        x = queue[head]
        head += 1
        for p in range(adj_ptr[x], adj_ptr[x + 1]):
            y = adj_node[p]
            if not seen[y]:
                e = adj_edge[p]
                seen[y] = True
                parent[y] = x
                pedge[y] = e
                depth[y] = depth[x] + 1
                pot[y] = C[bi[e], bj[e]] - pot[x]
                queue[tail] = y
                tail += 1


@njit(cache=True)
def transport_simplex(C, a, b, max_pivots):
    """Network simplex on the n x m transportation polytope.

    Returns ``(plan, pivots, ok)``. Pricing scans blocks of max(sqrt(nm), 2(n+m))
    cells and enters the most negative reduced cost of the first block that
    has one; after n+m consecutive degenerate pivots it switches to Bland's
    rule until a nondegenerate pivot occurs. Leaving ties go to the lowest
    (row, col) cell.
    """
    n, m = C.shape
    nodes = n + m
    ne = n + m - 1
    nm = n * m
    bi = np.empty(ne, np.int64)
    bj = np.empty(ne, np.int64)
    flow = np.empty(ne)
    _northwest_corner(a, b, bi, bj, flow)
    basic = np.zeros((n, m), np.bool_)
    for e in range(ne):
        basic[bi[e], bj[e]] = True

    adj_ptr = np.zeros(nodes + 1, np.int64)
    adj_node = np.empty(2 * ne, np.int64)
    adj_edge = np.empty(2 * ne, np.int64)
    parent = np.empty(nodes, np.int64)
    pedge = np.empty(nodes, np.int64)
    depth = np.empty(nodes, np.int64)
    pot = np.empty(nodes)
    cyc = np.empty(nodes, np.int64)
    up_a = np.empty(nodes, np.int64)

    scale = 0.0
    for i in range(n):
        for j in range(m):
            v = abs(C[i, j])
            if v > scale:
                scale = v
    eps = 1e-12 * max(scale, 1e-300)
    block = min(max(int(np.sqrt(nm)), 2 * nodes), nm)
    cursor = 0
    degenerate = 0
    pivots = 0
    ok = True
    while True:
        _tree_potentials(C, n, m, bi, bj, adj_ptr, adj_node, adj_edge, parent, pedge, depth, pot)
        ent = -1
        best = -eps
        if degenerate > nodes:
            for k in range(nm):
                i = k // m
                j = k - i * m
                if not basic[i, j]:
                    rc = C[i, j] - pot[i] - pot[n + j]
                    if rc < -eps:
                        ent = k
                        break
        else:
            total = 0
            while total < nm:
                cnt = min(block, nm - total)
                for t in range(cnt):
                    k = cursor + t
                    if k >= nm:
                        k -= nm
                    i = k // m
                    j = k - i * m
                    if not basic[i, j]:
                        rc = C[i, j] - pot[i] - pot[n + j]
                        if rc < best:
                            best = rc
                            ent = k
                cursor += cnt
                if cursor >= nm:
                    cursor -= nm
                total += cnt
                if ent >= 0:
                    break
        if ent < 0:
            break
        if pivots >= max_pivots:
            ok = False
            break
        pivots += 1
        ei = ent // m
        ej = ent - ei * m
        # cycle: edges from column node up to the LCA, then down to the row node
        x = ei
        y = n + ej
        na = 0
        nb_ = 0
        while x != y:
            if depth[x] >= depth[y]:
                up_a[na] = pedge[x]
                na += 1
                x = parent[x]
            else:
                cyc[nb_] = pedge[y]
                nb_ += 1
                y = parent[y]
        clen = nb_
        for t in range(na - 1, -1, -1):
            cyc[clen] = up_a[t]
            clen += 1
        leave = -1
        theta = np.inf
        for t in range(0, clen, 2):
            e = cyc[t]
            f = flow[e]
            if leave < 0 or f < theta or (
                f == theta and bi[e] * m + bj[e] < bi[leave] * m + bj[leave]
            ):
                theta = f
                leave = e
        if theta < 0.0:
            theta = 0.0
        for t in range(clen):
            e = cyc[t]
            if t % 2 == 0:
                flow[e] -= theta
            else:
                flow[e] += theta
        basic[bi[leave], bj[leave]] = False
        bi[leave] = ei
        bj[leave] = ej
        flow[leave] = theta
        basic[ei, ej] = True
        if theta == 0.0:
            degenerate += 1
        else:
            degenerate = 0

    plan = np.zeros((n, m))
    for e in range(ne):
        if flow[e] > 0.0:
            plan[bi[e], bj[e]] += flow[e]
    return plan, pivots, ok


@njit(cache=True)
def _fps_next(dmin):
    # lowest index among candidates within FPS_TIE_RTOL of the max-min distance
    best = dmin.max()
    thr = best - FPS_TIE_RTOL * best
    for i in range(dmin.size):
        if dmin[i] >= thr:
            return i
    return 0


@njit(cache=True)
def fps_points(points, k, first):
    n, d = points.shape
    out = np.empty(k, np.int64)
    dmin = np.full(n, np.inf)
    cur = first
    for s in range(k):
        out[s] = cur
        for i in range(n):
            acc = 0.0
            for c in range(d):
                diff = points[i, c] - points[cur, c]
                acc += diff * diff
            dist = np.sqrt(acc)
            if dist < dmin[i]:
                dmin[i] = dist
        cur = _fps_next(dmin)
    return out


@njit(cache=True)
def fps_matrix(D, k, first):
    n = D.shape[1]
    out = np.empty(k, np.int64)
    dmin = np.full(n, np.inf)
    cur = first
    for s in range(k):
        out[s] = cur
        for i in range(n):
            if D[cur, i] < dmin[i]:
                dmin[i] = D[cur, i]
        cur = _fps_next(dmin)
    return out


@njit(cache=True)
def confusion_counts(D, classes, reps, n_classes):
    R = reps.shape[0]
    N = D.shape[0]
    counts = np.zeros((n_classes, n_classes))
    is_rep = np.zeros(N, np.bool_)
    for r in range(R):
        for c in range(n_classes):
            is_rep[reps[r, c]] = True
        for it in range(N):
            if is_rep[it]:
                continue
            best = np.inf
            best_idx = N
            pred = -1
            for c in range(n_classes):
                rep = reps[r, c]
                dist = D[it, rep]
                if dist < best or (dist == best and rep < best_idx):
                    best = dist
                    best_idx = rep
                    pred = c
            counts[classes[it], pred] += 1.0
        for c in range(n_classes):
            is_rep[reps[r, c]] = False
    return counts


@njit(cache=True)
def pairwise_weighted_l2(E, W):
    N, n, _ = E.shape
    out = np.zeros((N, N))
    for a in range(N):
        for b in range(a + 1, N):
            acc = 0.0
            for i in range(n):
                for j in range(n):
                    diff = E[a, i, j] - E[b, i, j]
                    acc += W[i, j] * diff * diff
            out[a, b] = np.sqrt(acc)
            out[b, a] = out[a, b]
    return out
