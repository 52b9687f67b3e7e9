"""Weighted symmetric nonnegative tri-factorization ``X ~ U S U^T``.

Minimises ``sum_ij W_ij ((U S U^T)_ij - T_ij)^2`` over ``U >= 0`` and
symmetric ``S >= 0`` with multiplicative updates. An update that raises the
objective is pulled back toward the previous iterate by repeated halving,
so the recorded objective never increases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-12
MAX_HALVINGS = 30


@dataclass(frozen=True)
class FactorPair:
    U: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        S = np.asarray(self.S, dtype=float)
        if U.ndim != 2 or S.shape != (U.shape[1], U.shape[1]):
            raise ValueError("U must be p x k and S must be k x k")
        if np.any(U < 0) or np.any(S < 0):
            raise ValueError("factors must be nonnegative")
        if not np.array_equal(S, S.T):
            raise ValueError("S must be symmetric")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "S", S)

    @property
    def rank(self) -> int:
        return self.S.shape[0]

    def reconstruct(self) -> np.ndarray:
        return _reconstruct(self.U, self.S)


@dataclass(frozen=True)
class WeightedTarget:
    W: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        T = np.asarray(self.T, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape != T.shape:
            raise ValueError("W and T must be square matrices of equal shape")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(T))):
            raise ValueError("W and T must be finite")
        if np.any(W <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "T", T)

    @property
    def p(self) -> int:
        return self.W.shape[0]


def _reconstruct(U, S):
    R = U @ S @ U.T
    # exact symmetry; matmul round-off differs between (i,j) and (j,i)
    return (R + R.T) / 2


def _objective(W, T, U, S) -> float:
    return float(np.sum(W * (_reconstruct(U, S) - T) ** 2))


def weighted_objective(wt: WeightedTarget, f: FactorPair) -> float:
    if f.U.shape[0] != wt.p:
        raise ValueError("dimension mismatch between factors and target")
    return _objective(wt.W, wt.T, f.U, f.S)


def initial_factors(wt: WeightedTarget, k: int, seed=None) -> FactorPair:
    """Random start scaled to the mean of the target."""
    rng = np.random.default_rng(seed)
    level = max(float(np.mean(wt.T)), EPS)
    U = np.maximum(rng.random((wt.p, k)) * np.sqrt(level / k), EPS)
    S = np.eye(k) * level
    return FactorPair(U, S)


def _damped(W, T, old, new, f_old, evaluate):
    """Accept ``new`` or the closest halving toward ``old`` that does not
    raise the objective."""
    f_new = evaluate(new)
    step = 1.0
    for _ in range(MAX_HALVINGS):
        if f_new <= f_old:
            return new, f_new
        step /= 2
        new = old + step * (new - old)
        f_new = evaluate(new)
    return old, f_old


def factorize(
    wt: WeightedTarget,
    k: int,
    iters: int = 30,
    seed=None,
    init: FactorPair | None = None,
    trace: list | None = None,
    tol: float = 0.0,
) -> FactorPair:
    """Weighted tri-factorization by damped multiplicative updates.

    Parameters
    ----------
    wt : WeightedTarget
        Positive symmetric weights and symmetric target.
    k : int
        Inner rank.
    iters : int
        Number of update sweeps (one ``U`` and one ``S`` update each).
    seed : int, optional
        Seed for the random start; ignored when ``init`` is given.
    init : FactorPair, optional
        Warm start.
    trace : list, optional
        If given, receives the objective before the first sweep and after
        every sweep.
    tol : float
        Stop early once a sweep lowers the objective by less than
        ``tol`` times its current value. Zero disables early stopping.
    """
    if k < 1 or iters < 1:
        raise ValueError("need k >= 1 and iters >= 1")
    if init is None:
        init = initial_factors(wt, k, seed)
    elif init.U.shape != (wt.p, k):
        raise ValueError(f"init U has shape {init.U.shape}, expected {(wt.p, k)}")
    W, T = wt.W, wt.T
    WTp = W * np.maximum(T, 0.0)
    WTn = W * np.maximum(-T, 0.0)
    U, S = init.U.copy(), init.S.copy()
    f = _objective(W, T, U, S)
    if trace is not None:
        trace.append(f)
    for _ in range(iters):
        f_start = f

        R = _reconstruct(U, S)
        US = U @ S
        num = WTp @ US
        den = (W * R) @ US + WTn @ US + EPS
        U_new = U * (num / den)
        U, f = _damped(W, T, U, U_new, f, lambda V: _objective(W, T, V, S))

        R = _reconstruct(U, S)
        num = U.T @ WTp @ U
        den = U.T @ (W * R) @ U + U.T @ WTn @ U + EPS
        S_new = S * (num / den)
        S_new = (S_new + S_new.T) / 2
        S, f = _damped(W, T, S, S_new, f, lambda V: _objective(W, T, U, V))

        if trace is not None:
            trace.append(f)
        if tol > 0 and f_start - f <= tol * max(f_start, EPS):
            break
    return FactorPair(U, S)
