"""Node-specific degree prior.

For node ``i`` with (amplified) target degree ``d_i``, the ``k``-th largest
off-diagonal entry of row ``i`` is charged ``b_i(k) = (H_k / H_{d_i})**alpha``
with ``H_k = log(k + 1)``. The coefficients are below one up to rank ``d_i``
and above one beyond it, so the penalty favours rows whose mass sits in
their first ``d_i`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

L1_LIMIT_ALPHA = 1e-6


def h_value(k):
    """``log(k + 1)``; accepts scalars or arrays of ranks ``k >= 1``."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 1):
        raise ValueError("rank k must be >= 1")
    out = np.log(k_arr + 1.0)
    return float(out) if out.ndim == 0 else out


def coefficients(d_amplified: int, alpha: float, p: int) -> np.ndarray:
    """Penalty coefficients ``b(1..p-1)`` for one node of target degree ``d_amplified``."""
    if p < 2:
        raise ValueError("need at least two nodes")
    if not 1 <= d_amplified <= p - 1:
        raise ValueError(f"degree {d_amplified} outside [1, {p - 1}]")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha <= L1_LIMIT_ALPHA:
        return np.ones(p - 1)
    ranks = np.arange(1, p)
    return (np.log(ranks + 1.0) / np.log(d_amplified + 1.0)) ** alpha


def coefficient_matrix(degrees, alpha: float, p: int | None = None) -> np.ndarray:
    """Row ``i`` holds ``coefficients(degrees[i], alpha, p)``; shape ``(p, p-1)``."""
    d = np.asarray(degrees)
    if p is None:
        p = d.shape[0]
    if d.shape != (p,):
        raise ValueError(f"expected {p} degrees, got shape {d.shape}")
    if np.any(d < 1) or np.any(d > p - 1):
        raise ValueError(f"degrees must lie in [1, {p - 1}]")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha <= L1_LIMIT_ALPHA:
        return np.ones((p, p - 1))
    ranks = np.arange(1, p)
    return (np.log(ranks + 1.0)[None, :] / np.log(d + 1.0)[:, None]) ** alpha


@dataclass(frozen=True)
class DegreeTarget:
    """Estimated per-node degrees ``d`` and their amplified version ``d'``."""

    d: np.ndarray
    d_amplified: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.int64)
        d_amp = np.asarray(self.d_amplified, dtype=np.int64)
        if d.shape != d_amp.shape or d.ndim != 1:
            raise ValueError("d and d_amplified must be vectors of equal length")
        p = d.shape[0]
        if np.any(d_amp < 1) or np.any(d_amp > p - 1):
            raise ValueError(f"amplified degrees must lie in [1, {p - 1}]")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "d_amplified", d_amp)

    @property
    def p(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class PriorConfig:
    """Prior strength exponent, amplification factor and degree targets."""

    alpha: float
    c: float
    degrees: DegreeTarget

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.c < 1:
            raise ValueError("amplification factor c must be >= 1")

    @property
    def is_l1(self) -> bool:
        return self.alpha <= L1_LIMIT_ALPHA

    def coefficient_matrix(self) -> np.ndarray:
        return coefficient_matrix(self.degrees.d_amplified, self.alpha)


def offdiag_rows(X: np.ndarray) -> np.ndarray:
    """Rows of ``X`` with the diagonal entry removed, shape ``(p, p-1)``."""
    p = X.shape[0]
    return X[~np.eye(p, dtype=bool)].reshape(p, p - 1)


def prior_value(X: np.ndarray, coef: np.ndarray) -> float:
    """Unchecked penalty evaluation for a precomputed coefficient matrix."""
    rows = -np.sort(-offdiag_rows(X), axis=1)
    return float(np.sum(coef * rows))


def _check_score_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("score matrix must be square")
    if not np.all(np.isfinite(X)):
        raise ValueError("score matrix has non-finite entries")
    if np.any(offdiag_rows(X) < 0) if X.shape[0] > 1 else False:
        raise ValueError("score matrix has negative entries")
    scale = max(1.0, float(np.max(np.abs(X))) if X.size else 1.0)
    if np.max(np.abs(X - X.T), initial=0.0) > 1e-9 * scale:
        raise ValueError("score matrix is not symmetric")
    return X


def evaluate_prior(X, degrees, alpha: float) -> float:
    """Penalty ``sum_i sum_k b_i(k) X_{i,[k]}`` of a symmetric non-negative matrix.

    ``degrees`` are the already amplified per-node targets. See
    :func:`evaluate_prior_config` to evaluate with a :class:`PriorConfig`.
    """
    X = _check_score_matrix(X)
    return prior_value(X, coefficient_matrix(degrees, alpha, X.shape[0]))


def evaluate_prior_config(X, config: PriorConfig) -> float:
    return evaluate_prior(X, config.degrees.d_amplified, config.alpha)


def coefficient_gap(t: int, delta: int, d_amplified: int, alpha: float, p: int | None = None) -> float:
    """Coefficient difference between ranks ``t`` and ``t + delta`` of one row.

    The result is checked against ``(log(delta + 1) / log(d + 1))**alpha``.
    """
    if t < 1 or delta < 0:
        raise ValueError("need t >= 1 and delta >= 0")
    if p is not None and t + delta > p - 1:
        raise ValueError(f"rank {t + delta} exceeds p - 1 = {p - 1}")
    if d_amplified < 1:
        raise ValueError("degree must be >= 1")
    if delta == 0:
        return 0.0
    denom = np.log(d_amplified + 1.0) ** alpha
    gap = (np.log(t + delta + 1.0) ** alpha - np.log(t + 1.0) ** alpha) / denom
    bound = (np.log(delta + 1.0) / np.log(d_amplified + 1.0)) ** alpha
    # x**alpha is subadditive only for alpha <= 1; beyond that the bound can fail
    if alpha <= 1:
        assert gap <= bound * (1 + 1e-12), (gap, bound)
    return float(gap)


def coefficient_gap_bound(delta: int, d_amplified: int, alpha: float) -> float:
    return float((np.log(delta + 1.0) / np.log(d_amplified + 1.0)) ** alpha)


# ---------------------------------------------------------------------------
# rearrangement


def is_graphical(degrees) -> bool:
    """Erdos-Gallai test for a simple-graph degree sequence."""
    d = np.sort(np.asarray(degrees, dtype=np.int64))[::-1]
    if d.size == 0:
        return True
    if np.any(d < 0) or d.sum() % 2:
        return False
    n = d.size
    prefix = np.cumsum(d)
    for k in range(1, n + 1):
        rhs = k * (k - 1) + np.minimum(d[k:], k).sum()
        if prefix[k - 1] > rhs:
            return False
    return True


def top_k_degrees(X: np.ndarray, K: int) -> np.ndarray:
    """Degrees of the graph formed by the ``K`` largest upper-diagonal entries.

    Equal entries are taken in row-major order.
    """
    p = X.shape[0]
    iu, ju = np.triu_indices(p, 1)
    order = np.argsort(-X[iu, ju], kind="stable")[:K]
    deg = np.zeros(p, dtype=np.int64)
    np.add.at(deg, iu[order], 1)
    np.add.at(deg, ju[order], 1)
    return deg


def _slot_costs(filled_count: np.ndarray, log_d: np.ndarray, alpha: float) -> np.ndarray:
    if alpha <= L1_LIMIT_ALPHA:
        return np.ones(filled_count.shape[0])
    return (np.log(filled_count + 2.0) / log_d) ** alpha


def _greedy_place(Y, d, alpha, allowed_for_step):
    """Place the sorted values ``Y`` one by one on the admissible empty pair
    with the smallest summed next-slot coefficient (lowest ``(i, j)`` on ties).

    ``allowed_for_step(s)`` returns an upper-triangular boolean mask of pairs
    admissible at step ``s``; filled pairs are excluded automatically.
    """
    p = d.shape[0]
    log_d = np.log(d + 1.0)
    filled = np.zeros((p, p), dtype=bool)
    count = np.zeros(p, dtype=np.int64)
    Xs = np.zeros((p, p))
    order = []
    for s, y in enumerate(Y):
        cost = _slot_costs(count, log_d, alpha)
        cost = np.where(count < p - 1, cost, np.inf)
        pair_cost = cost[:, None] + cost[None, :]
        ok = allowed_for_step(s) & ~filled
        pair_cost = np.where(ok, pair_cost, np.inf)
        flat = int(np.argmin(pair_cost))
        i, j = divmod(flat, p)
        if not np.isfinite(pair_cost[i, j]):
            raise RuntimeError("no admissible pair left")  # pragma: no cover
        Xs[i, j] = Xs[j, i] = y
        filled[i, j] = filled[j, i] = True
        count[i] += 1
        count[j] += 1
        order.append((i, j))
    return Xs, order


def _alternating_trail(adj: np.ndarray, residual: np.ndarray):
    """Find an edge-simple trail that starts and ends with non-edges at
    vertices short of their target degree, alternating non-edge/edge.

    Flipping it raises both end degrees by one and leaves the rest unchanged.
    Searched by iterative deepening so short trails are preferred.
    """
    p = adj.shape[0]
    deficit = [int(v) for v in np.flatnonzero(residual > 0)]
    max_len = p * (p - 1) // 2

    def extend(path, used, v, start, limit):
        # path has odd length so far is even: next step is a non-edge
        for w in range(p):
            if w == v or adj[v, w]:
                continue
            key = (min(v, w), max(v, w))
            if key in used:
                continue
            ok_end = residual[w] > 0 and (w != start or residual[start] >= 2)
            if ok_end:
                return path + [key]
            if len(path) + 3 > limit:
                continue
            used.add(key)
            for x in np.flatnonzero(adj[w]):
                x = int(x)
                ekey = (min(w, x), max(w, x))
                if ekey in used:
                    continue
                used.add(ekey)
                found = extend(path + [key, ekey], used, x, start, limit)
                if found is not None:
                    return found
                used.discard(ekey)
            used.discard(key)
        return None

    for limit in range(3, max_len + 1, 2):
        for s in deficit:
            trail = extend([], set(), s, s, limit)
            if trail is not None:
                return trail
    return None


def _realize_degrees(d: np.ndarray, alpha: float) -> np.ndarray:
    """Graph with degree sequence ``d`` grown greedily by cheapest next slots.

    Pairs are added between nodes still below target, cheapest summed
    coefficient first. When no such pair is free, an alternating trail
    rewires the partial graph.
    """
    p = d.shape[0]
    log_d = np.log(d + 1.0)
    adj = np.zeros((p, p), dtype=bool)
    count = np.zeros(p, dtype=np.int64)
    target_edges = int(d.sum()) // 2
    upper = np.triu(np.ones((p, p), dtype=bool), 1)
    while count.sum() < 2 * target_edges:
        need = count < d
        ok = upper & need[:, None] & need[None, :] & ~adj
        if ok.any():
            cost = _slot_costs(count, log_d, alpha)
            pair_cost = np.where(ok, cost[:, None] + cost[None, :], np.inf)
            i, j = divmod(int(np.argmin(pair_cost)), p)
            adj[i, j] = adj[j, i] = True
            count[i] += 1
            count[j] += 1
            continue
        trail = _alternating_trail(adj, d - count)
        if trail is None:
            raise ValueError("infeasible degree sequence")
        for u, v in trail:
            adj[u, v] = adj[v, u] = not adj[u, v]
        count = adj.sum(axis=1)
    return adj


def rearrange(X, target_degrees, K: int, alpha: float) -> np.ndarray:
    """Rearrange the entries of ``X`` so its top-``K`` graph has the target degrees.

    The upper-diagonal entries are sorted in decreasing order and placed one
    at a time into the empty symmetric slot whose two next-rank coefficients
    sum to the least. If that plain greedy order cannot realise the targets
    (two nodes still short of their degree may already be paired), the
    top-``K`` slots are restricted to a degree-realising graph built by the
    same greedy rule, and the remaining entries fill the other slots. When
    the result still costs more than ``X``, a degree-preserving local search
    tries to close the gap; this is not guaranteed to succeed.

    Returns the rearranged matrix; its entry multiset equals that of ``X``.
    """
    X = _check_score_matrix(X)
    p = X.shape[0]
    d = np.asarray(target_degrees, dtype=np.int64)
    if d.shape != (p,):
        raise ValueError(f"expected {p} target degrees")
    if int(d.sum()) != 2 * K:
        raise ValueError(f"infeasible degree sequence: sum {int(d.sum())} != 2K = {2 * K}")
    if np.any(d < 1) or np.any(d > p - 1):
        raise ValueError(f"infeasible degree sequence: degrees must lie in [1, {p - 1}]")
    if not is_graphical(d):
        raise ValueError("infeasible degree sequence: not graphical")

    iu, ju = np.triu_indices(p, 1)
    Y = np.sort(X[iu, ju], kind="stable")[::-1]
    upper = np.triu(np.ones((p, p), dtype=bool), 1)
    coef = coefficient_matrix(d, alpha, p)
    base = prior_value(X, coef)

    plain, order = _greedy_place(Y, d, alpha, lambda s: upper)
    deg = np.zeros(p, dtype=np.int64)
    for i, j in order[:K]:
        deg[i] += 1
        deg[j] += 1
    plain_ok = np.array_equal(deg, d)
    if plain_ok and prior_value(plain, coef) <= base:
        return plain

    graph = np.triu(_realize_degrees(d, alpha), 1)
    rest = upper & ~graph
    realized, _ = _greedy_place(Y, d, alpha, lambda s: graph if s < K else rest)
    best = realized
    if plain_ok and prior_value(plain, coef) <= prior_value(realized, coef):
        best = plain
    if prior_value(best, coef) > base:
        best = _local_improve(best, K, coef, base)
    return best


def _local_improve(Xs: np.ndarray, K: int, coef: np.ndarray, goal: float, max_sweeps: int = 50) -> np.ndarray:
    """First-improvement search over moves that keep the top-``K`` degrees.

    Moves: swapping the values of two pairs inside the top-``K`` group or
    inside the remainder, and 2-switches ``(a,b),(c,e) -> (a,c),(b,e)`` that
    exchange top-``K`` values with remainder values. Stops once the penalty
    reaches ``goal`` or no move helps.
    """
    p = Xs.shape[0]
    Xs = Xs.copy()
    iu, ju = np.triu_indices(p, 1)
    current = prior_value(Xs, coef)

    def swap(pairs_a, pairs_b):
        for (i, j), (k, l) in zip(pairs_a, pairs_b):
            Xs[i, j], Xs[k, l] = Xs[k, l], Xs[i, j]
            Xs[j, i], Xs[l, k] = Xs[i, j], Xs[k, l]

    for _ in range(max_sweeps):
        if current <= goal:
            break
        improved = False
        order = np.argsort(-Xs[iu, ju], kind="stable")
        top = [(int(iu[t]), int(ju[t])) for t in order[:K]]
        low = [(int(iu[t]), int(ju[t])) for t in order[K:]]
        in_top = np.zeros((p, p), dtype=bool)
        for i, j in top:
            in_top[i, j] = in_top[j, i] = True
        moves = []
        for group in (top, low):
            for a in range(len(group)):
                for b in range(a + 1, len(group)):
                    moves.append(([group[a]], [group[b]]))
        for a in range(len(top)):
            for b in range(a + 1, len(top)):
                (u, v), (x, y) = top[a], top[b]
                if len({u, v, x, y}) < 4:
                    continue
                for (s1, t1), (s2, t2) in (((u, x), (v, y)), ((u, y), (v, x))):
                    if not in_top[s1, t1] and not in_top[s2, t2]:
                        e1 = (min(s1, t1), max(s1, t1))
                        e2 = (min(s2, t2), max(s2, t2))
                        moves.append(([top[a], top[b]], [e1, e2]))
        for pa, pb in moves:
            swap(pa, pb)
            value = prior_value(Xs, coef)
            if value < current - 1e-15 and np.array_equal(
                top_k_degrees(Xs, K), top_k_degrees_from_pairs(p, top)
            ):
                current = value
                improved = True
                break
            swap(pa, pb)
        if not improved:
            break
    return Xs


def top_k_degrees_from_pairs(p: int, pairs) -> np.ndarray:
    deg = np.zeros(p, dtype=np.int64)
    for i, j in pairs:
        deg[i] += 1
        deg[j] += 1
    return deg
