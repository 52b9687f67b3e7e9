"""Proximal operator of the sorted penalty with nondecreasing weights,
restricted to the nonnegative orthant.

Solves ``min_{x >= 0} 1/2 ||x - a||^2 + tau * sum_k b_k x_[k]`` where
``x_[k]`` is the k-th largest entry of ``x`` and ``b`` is nondecreasing.
The largest entry of ``a`` receives the smallest weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProxProblem:
    a: np.ndarray
    b: np.ndarray
    tau: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise ValueError("a and b must be vectors of equal length")
        if np.any(b < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diff(b) < 0):
            raise ValueError("weights must be nondecreasing")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def pool_adjacent_violators(y: np.ndarray) -> np.ndarray:
    """Least-squares fit of a nonincreasing sequence to ``y``."""
    n = y.shape[0]
    sums = np.empty(n)
    counts = np.empty(n, dtype=np.int64)
    k = 0
    for value in y:
        sums[k] = value
        counts[k] = 1
        # merge while the new block mean exceeds the previous one
        while k > 0 and sums[k - 1] * counts[k] <= sums[k] * counts[k - 1]:
            sums[k - 1] += sums[k]
            counts[k - 1] += counts[k]
            k -= 1
        k += 1
    return np.repeat(sums[:k] / counts[:k], counts[:k])


def prox(problem: ProxProblem) -> np.ndarray:
    """Exact minimiser, O(n log n).

    Sort ``a`` descending (ties by index), pair with ``b`` ascending, shift by
    ``tau * b``, pool violators of the nonincreasing order, clamp at zero and
    undo the sort.
    """
    a, b, tau = problem.a, problem.b, problem.tau
    order = np.argsort(-a, kind="stable")
    t = a[order] - tau * b
    if np.any(np.diff(t) > 0):
        t = pool_adjacent_violators(t)
    x = np.empty_like(a)
    x[order] = np.maximum(t, 0.0)
    return x


def prox_rows(A: np.ndarray, B: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise :func:`prox` of ``A`` with per-row weight vectors ``B``."""
    order = np.argsort(-A, axis=1, kind="stable")
    t = np.take_along_axis(A, order, axis=1) - tau * B
    bad = np.flatnonzero(np.any(np.diff(t, axis=1) > 0, axis=1))
    for r in bad:
        t[r] = pool_adjacent_violators(t[r])
    X = np.empty_like(A)
    np.put_along_axis(X, order, np.maximum(t, 0.0), axis=1)
    return X


def prox_objective(problem: ProxProblem, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != problem.a.shape:
        raise ValueError("dimension mismatch")
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    ranked = -np.sort(-x)
    return float(0.5 * np.sum((x - problem.a) ** 2) + problem.tau * np.dot(problem.b, ranked))
