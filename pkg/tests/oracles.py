"""Independent brute-force reference implementations used by the tests.

Everything here is written from the definitions, not from the package code:
dense matrix powers for triangle counts, BFS loops for eccentricity, naive
peeling for core numbers, direct formulas for the summary statistics and the
ranking metrics. Slow is fine; these run on small inputs.
"""

import math

import numpy as np
from scipy import stats

# --- graph helpers -----------------------------------------------------------


def adjacency_dense(graph):
    a = np.zeros((graph.node_count, graph.node_count))
    for u, v in graph.edge_array:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def neighbor_sets(graph):
    nbr = {u: set() for u in range(graph.node_count)}
    for u, v in graph.edge_array:
        nbr[int(u)].add(int(v))
        nbr[int(v)].add(int(u))
    return nbr


def degrees_brute(graph):
    nbr = neighbor_sets(graph)
    return np.array([len(nbr[u]) for u in range(graph.node_count)], dtype=float)


def wedges_brute(graph):
    d = degrees_brute(graph)
    return d * (d - 1.0) / 2.0


def triangles_node_brute(graph):
    a = adjacency_dense(graph)
    return np.diag(a @ a @ a) / 2.0


def triangles_edge_brute(graph):
    nbr = neighbor_sets(graph)
    return np.array([len(nbr[int(u)] & nbr[int(v)]) for u, v in graph.edge_array],
                    dtype=float)


def eccentricity_brute(graph):
    """BFS from every node; unreachable nodes ignored (per-component ecc)."""
    nbr = neighbor_sets(graph)
    n = graph.node_count
    out = np.zeros(n)
    for s in range(n):
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in nbr[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        out[s] = max(dist.values())
    return out


def pagerank_brute(graph, damping=0.85, tol=1e-12, max_iter=10000):
    """Dense power iteration; dangling nodes spread uniformly."""
    n = graph.node_count
    if n == 1:
        return np.ones(1)
    nbr = neighbor_sets(graph)
    deg = np.array([len(nbr[u]) for u in range(n)], dtype=float)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = np.full(n, (1.0 - damping) / n)
        dangling_mass = x[deg == 0].sum()
        new += damping * dangling_mass / n
        for u in range(n):
            if deg[u] > 0:
                share = damping * x[u] / deg[u]
                for w in nbr[u]:
                    new[w] += share
        if np.abs(new - x).sum() < tol:
            return new
        x = new
    return x


def kcore_brute(graph):
    """Naive peeling: repeatedly remove a minimum-degree node."""
    nbr = neighbor_sets(graph)
    deg = {u: len(nbr[u]) for u in nbr}
    core = {}
    k = 0
    while deg:
        v = min(deg, key=lambda u: (deg[u], u))
        k = max(k, deg[v])
        core[v] = k
        for w in nbr[v]:
            if w in deg:
                deg[w] -= 1
                nbr[w].discard(v)
        del deg[v]
    return np.array([core[u] for u in range(graph.node_count)], dtype=float)


# --- summary statistics ------------------------------------------------------

# documented grouping tolerances for cardinality / entropy
_GROUP_RTOL = 1e-9
_GROUP_ATOL = 1e-12


def _group_sizes(s):
    sizes = [1]
    for a, b in zip(s[:-1], s[1:]):
        if b - a > _GROUP_ATOL + _GROUP_RTOL * max(abs(a), abs(b)):
            sizes.append(1)
        else:
            sizes[-1] += 1
    return sizes


def _quantile_linear(s, p):
    n = len(s)
    h = (n - 1) * p
    lo = int(math.floor(h))
    if lo >= n - 1:
        return float(s[n - 1])
    return float(s[lo] + (h - lo) * (s[lo + 1] - s[lo]))


def _kendall_self(s):
    """(tau, p) of kendalltau(s, s): ties under the same tolerance grouping
    as the cardinality statistic, asymptotic normal p-value with the
    standard tie corrections."""
    n = len(s)
    t = np.array(_group_sizes(s), dtype=np.int64)
    big_t = int((t * (t - 1) // 2).sum())
    x0 = float((t * (t - 1.0) * (t - 2)).sum())
    x1 = float((t * (t - 1.0) * (2 * t + 5)).sum())
    tot = n * (n - 1) // 2
    con_minus_dis = tot - big_t
    tau = con_minus_dis / np.sqrt(tot - big_t) / np.sqrt(tot - big_t)
    tau = min(1.0, max(-1.0, float(tau)))
    m = n * (n - 1.0)
    var = (m * (2 * n + 5) - x1 - x1) / 18 + (2.0 * big_t * big_t) / m \
        + x0 * x0 / (9.0 * m * (n - 2))
    z = con_minus_dis / np.sqrt(var)
    p = 2.0 * stats.norm.sf(abs(z))
    return tau, float(p)


def summary_brute(values):
    """The 58 statistics in schema order, each from its direct formula."""
    s = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = s.size
    out = []

    groups = _group_sizes(s)
    out.append(float(len(groups)))
    out.append(sum(1 for v in s if v != 0.0) / n)

    q1 = _quantile_linear(s, 0.25)
    med = _quantile_linear(s, 0.5)
    q3 = _quantile_linear(s, 0.75)
    iqr = q3 - q1
    out += [q1, q3, iqr]
    for a in (1.5, 3.0):
        lb, ub = q1 - a * iqr, q3 + a * iqr
        out += [lb, ub, float(sum(1 for v in s if v < lb or v > ub))]

    mu = math.fsum(s) / n
    var = math.fsum((v - mu) ** 2 for v in s) / n
    sd = math.sqrt(var)
    for a in (2.0, 3.0):
        lb, ub = mu - a * sd, mu + a * sd
        cnt = float(sum(1 for v in s if v < lb or v > ub))
        out += [lb, ub, cnt, cnt / n]

    if n < 3 or len(groups) < 2:
        out += [0.0] * 6
    else:
        # both spearman and pearson correlate the sorted vector with itself,
        # so the statistic is exactly 1 and the p-value underflows to 0
        tau, kp = _kendall_self(s)
        out += [1.0, 0.0, tau, kp, 1.0, 0.0]

    mn, mx = float(s[0]), float(s[-1])
    out += [mn, mx, mx - mn, med]

    gmean = math.exp(math.fsum(math.log(v) for v in s) / n) if mn > 0 else 0.0
    hmean = n / math.fsum(1.0 / v for v in s) if mn > 0 else 0.0
    out += [gmean, hmean, mu, sd, var]

    if sd > 0:
        m3 = math.fsum((v - mu) ** 3 for v in s) / n
        m4 = math.fsum((v - mu) ** 4 for v in s) / n
        out += [m3 / sd ** 3, m4 / sd ** 4 - 3.0]
    else:
        out += [0.0, 0.0]

    out.append(iqr / (q3 + q1) if q3 + q1 != 0 else 0.0)
    out.append(float(np.median(np.abs(s - med))))
    out.append(math.fsum(abs(v - mu) for v in s) / n)
    out.append(sd / mu if mu != 0 else 0.0)
    out.append(var / mu ** 2 if mu != 0 else 0.0)
    out.append(var / mu if mu != 0 else 0.0)
    out.append(mu ** 2 / var if var != 0 else 0.0)

    if len(groups) > 1:
        ent = -math.fsum((g / n) * math.log(g / n) for g in groups)
        out += [ent, ent / math.log(len(groups))]
    else:
        out += [0.0, 0.0]

    if mu != 0 and n > 1:
        mad_sum = float(np.abs(s[:, None] - s[None, :]).sum())
        out.append(mad_sum / (n * n) / (2.0 * abs(mu)))
    else:
        out.append(0.0)

    five = [mn, q1, med, q3, mx]
    out.append(max(b - a for a, b in zip(five[:-1], five[1:])))

    if mx > mn:
        edges = np.linspace(mn, mx, 11)
        hist = [0] * 10
        sums = [0.0] * 10
        for v in s:
            b = 9
            for k in range(10):
                if v >= edges[k] and v < edges[k + 1]:
                    b = k
                    break
            hist[b] += 1
            sums[b] += v
        centroids = [sums[k] / hist[k] for k in range(10) if hist[k] > 0]
        if len(centroids) > 1:
            out.append(max(b - a for a, b in zip(centroids[:-1], centroids[1:])))
        else:
            out.append(0.0)
        out += [c / n for c in hist]
    else:
        out.append(0.0)
        out += [1.0] + [0.0] * 9

    return np.asarray(out, dtype=np.float64)


# --- ranking metrics ---------------------------------------------------------


def mrr_brute(scores, labels):
    s = list(map(float, scores))
    best = math.inf
    for j, lab in enumerate(labels):
        if lab > 0:
            greater = sum(1 for v in s if v > s[j])
            equal = sum(1 for v in s if v == s[j])
            best = min(best, greater + (equal + 1.0) / 2.0)
    return 1.0 / best


def auc_brute(scores, labels):
    pos = [float(s) for s, y in zip(scores, labels) if y > 0]
    neg = [float(s) for s, y in zip(scores, labels) if y <= 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def ndcg1_brute(scores, true_perf):
    p = np.asarray(true_perf, dtype=np.float64)
    if p.max() == 0:
        return 1.0
    s = np.asarray(scores, dtype=np.float64)
    pick = int(np.flatnonzero(s == s.max())[0])
    return float(p[pick] / p.max())
