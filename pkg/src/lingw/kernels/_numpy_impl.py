"""Pure-numpy twins of the numba kernels (used when numba is disabled)."""

from collections import deque

import numpy as np

# relative tolerance under which max-min distances count as tied in FPS
FPS_TIE_RTOL = 1e-9


def _northwest_corner(a, b):
    n, m = a.shape[0], b.shape[0]
    ra, rb = a.copy(), b.copy()
    bi = np.empty(n + m - 1, np.int64)
    bj = np.empty(n + m - 1, np.int64)
    flow = np.empty(n + m - 1)
    i = j = 0
    for e in range(n + m - 1):
        x = min(ra[i], rb[j])
        bi[e], bj[e], flow[e] = i, j, x
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
    return bi, bj, flow


def _tree_potentials(C, n, m, bi, bj):
    nodes = n + m
    adj = [[] for _ in range(nodes)]
    for e in range(n + m - 1):
        r, c = int(bi[e]), n + int(bj[e])
        adj[r].append((c, e))
        adj[c].append((r, e))
    parent = np.full(nodes, -1, np.int64)
    pedge = np.full(nodes, -1, np.int64)
    depth = np.zeros(nodes, np.int64)
    pot = np.zeros(nodes)
    seen = np.zeros(nodes, bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y, e in adj[x]:
            if not seen[y]:
                seen[y] = True
                parent[y], pedge[y], depth[y] = x, e, depth[x] + 1
                pot[y] = C[bi[e], bj[e]] - pot[x]
                queue.append(y)
    return parent, pedge, depth, pot


def transport_simplex(C, a, b, max_pivots):
    n, m = C.shape
    nodes, nm = n + m, n * m
    bi, bj, flow = _northwest_corner(a, b)
    basic = np.zeros((n, m), bool)
    basic[bi, bj] = True
    flatC = C.ravel()
    scale = float(np.abs(C).max()) if C.size else 0.0
    eps = 1e-12 * max(scale, 1e-300)
    block = min(max(int(np.sqrt(nm)), 2 * nodes), nm)
    cursor = degenerate = pivots = 0
    ok = True
    while True:
        parent, pedge, depth, pot = _tree_potentials(C, n, m, bi, bj)
        ent = -1
        if degenerate > nodes:
            rc = flatC - np.repeat(pot[:n], m) - np.tile(pot[n:], n)
            rc[basic.ravel()] = np.inf
            hits = np.flatnonzero(rc < -eps)
            if hits.size:
                ent = int(hits[0])
        else:
            total = 0
            best = -eps
            while total < nm:
                cnt = min(block, nm - total)
                idx = (cursor + np.arange(cnt)) % nm
                rows, cols = idx // m, idx % m
                rc = flatC[idx] - pot[rows] - pot[n + cols]
                rc[basic[rows, cols]] = np.inf
                t = int(np.argmin(rc))
                if rc[t] < best:
                    best, ent = rc[t], int(idx[t])
                cursor = (cursor + cnt) % nm
                total += cnt
                if ent >= 0:
                    break
        if ent < 0:
            break
        if pivots >= max_pivots:
            ok = False
            break
        pivots += 1
        ei, ej = divmod(ent, m)
        x, y = ei, n + ej
        up_a, cyc = [], []
        while x != y:
            if depth[x] >= depth[y]:
                up_a.append(pedge[x])
                x = parent[x]
            else:
                cyc.append(pedge[y])
                y = parent[y]
        cyc.extend(reversed(up_a))
        cyc = np.asarray(cyc, np.int64)
        minus, plus = cyc[0::2], cyc[1::2]
        f = flow[minus]
        theta = f.min()
        tied = minus[f == theta]
        leave = int(tied[np.argmin(bi[tied] * m + bj[tied])])
        theta = max(theta, 0.0)
        flow[minus] -= theta
        flow[plus] += theta
        basic[bi[leave], bj[leave]] = False
        bi[leave], bj[leave], flow[leave] = ei, ej, theta
        basic[ei, ej] = True
        degenerate = degenerate + 1 if theta == 0.0 else 0

    plan = np.zeros((n, m))
    pos = flow > 0.0
    np.add.at(plan, (bi[pos], bj[pos]), flow[pos])
    return plan, pivots, ok


def _fps_next(dmin):
    # lowest index among candidates within FPS_TIE_RTOL of the max-min distance
    best = dmin.max()
    return int(np.argmax(dmin >= best - FPS_TIE_RTOL * best))


def fps_points(points, k, first):
    n, d = points.shape
    out = np.empty(k, np.int64)
    dmin = np.full(n, np.inf)
    cur = first
    for s in range(k):
        out[s] = cur
        acc = np.zeros(n)
        for c in range(d):
            diff = points[:, c] - points[cur, c]
            acc += diff * diff
        np.minimum(dmin, np.sqrt(acc), out=dmin)
        cur = _fps_next(dmin)
    return out


def fps_matrix(D, k, first):
    n = D.shape[1]
    out = np.empty(k, np.int64)
    dmin = np.full(n, np.inf)
    cur = first
    for s in range(k):
        out[s] = cur
        np.minimum(dmin, D[cur], out=dmin)
        cur = _fps_next(dmin)
    return out


def confusion_counts(D, classes, reps, n_classes):
    R = reps.shape[0]
    N = D.shape[0]
    counts = np.zeros((n_classes, n_classes))
    # order candidate representatives by item index so argmin's first-hit rule
    # implements the lowest-representative tie break
    order = np.argsort(reps, axis=1, kind="stable")
    sorted_reps = np.take_along_axis(reps, order, axis=1)
    chunk = max(1, 200_000 // max(N * n_classes, 1))
    items = np.arange(N)
    for start in range(0, R, chunk):
        sr = sorted_reps[start:start + chunk]
        od = order[start:start + chunk]
        dist = D[:, sr].transpose(1, 0, 2)  # (r, N, C)
        pick = np.argmin(dist, axis=2)
        pred = np.take_along_axis(od, pick, axis=1)
        is_rep = np.zeros((sr.shape[0], N), bool)
        np.put_along_axis(is_rep, sr, True, axis=1)
        true = np.broadcast_to(classes[items], pred.shape)
        keep = ~is_rep
        np.add.at(counts, (true[keep], pred[keep]), 1.0)
    return counts


def pairwise_weighted_l2(E, W):
    N = E.shape[0]
    out = np.zeros((N, N))
    for a in range(N - 1):
        diff = E[a][None] - E[a + 1:]
        out[a, a + 1:] = np.sqrt(np.einsum("bij,ij->b", diff * diff, W))
    return out + out.T
