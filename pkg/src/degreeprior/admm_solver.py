"""ADMM solver for degree-prior regularized matrix completion.

The objective

    sum_ij M_ij ((U S U^T)_ij - Omega_ij)^2 + lambda * S_H(X, c d, alpha),
    subject to X = U S U^T,

is split into a weighted tri-factorization step for ``(U, S)``, a prox step
for ``X`` and a scaled dual update ``Z += U S U^T - X``. The prox step keeps
``X`` symmetric through dual decomposition: each row is solved on its own and
a multiplier ``B`` trades off the asymmetry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .degree_prior import PriorConfig, offdiag_rows, prior_value
from .graph_data import ObservationMask
from .owl_prox import prox_rows
from .tri_factorization import FactorPair, WeightedTarget, factorize, initial_factors

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 0.3
    lam: float = 0.1
    eta: float = 50.0
    rank: int = 40
    outer_iters: int = 50
    inner_factorize_iters: int = 30
    warmup_iters: int = 300
    dual_iters: int = 20
    dual_step: float | None = None
    tol_primal: float = 1e-4
    tol_sym: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if min(self.outer_iters, self.inner_factorize_iters, self.dual_iters) < 1:
            raise ValueError("iteration budgets must be >= 1")
        if self.warmup_iters < 0:
            raise ValueError("warmup_iters must be >= 0")
        if self.dual_step is not None and self.dual_step <= 0:
            raise ValueError("dual_step must be positive")
        if self.tol_primal <= 0 or self.tol_sym <= 0:
            raise ValueError("tolerances must be positive")

    @property
    def step(self) -> float:
        return self.eta / 4 if self.dual_step is None else self.dual_step


@dataclass
class FitResult:
    """Final score matrix plus solver diagnostics."""

    X: np.ndarray
    factors: FactorPair
    converged: bool
    iterations: int
    residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)

    @property
    def primal_residual(self) -> float:
        return self.residuals[-1]


def build_loss_weights(mask: ObservationMask, rho: float) -> np.ndarray:
    """``1 - rho/2`` on observed pairs, ``rho/2`` elsewhere, zero diagonal."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    M = np.where(mask.matrix() > 0, 1.0 - rho / 2, rho / 2)
    np.fill_diagonal(M, 0.0)
    return M


def step_two_objective(X: np.ndarray, A: np.ndarray, coef: np.ndarray, lam: float, eta: float) -> float:
    """``eta/2 ||X - A||^2 + lam * S_H(X)`` over off-diagonal entries."""
    diff = offdiag_rows(X) - offdiag_rows(A)
    return float(eta / 2 * np.sum(diff**2) + lam * prior_value(X, coef))


def _symmetrize(X):
    out = np.maximum((X + X.T) / 2, 0.0)
    np.fill_diagonal(out, 0.0)
    return out


def rank_weights(X: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Penalty weight each off-diagonal entry receives in its own row.

    Entry ``(i, j)`` gets ``coef[i, k-1]`` where ``k`` is the rank of
    ``X[i, j]`` among row ``i``'s off-diagonal entries (ties by column).
    The diagonal is zero.
    """
    p = X.shape[0]
    off = ~np.eye(p, dtype=bool)
    rows = X[off].reshape(p, p - 1)
    order = np.argsort(-rows, axis=1, kind="stable")
    G_rows = np.empty_like(rows)
    np.put_along_axis(G_rows, order, coef, axis=1)
    G = np.zeros((p, p))
    G[off] = G_rows.ravel()
    return G


def _polish(X, A_sym, coef, lam, eta, max_iters):
    """Majorize-minimize on the symmetric objective.

    The sorted penalty is concave, so freezing each entry's rank weight gives
    a linear upper bound; its minimiser is a shifted clamp of ``A_sym``.
    Stops at a fixed point of the rank assignment.
    """
    for _ in range(max_iters):
        G = rank_weights(X, coef)
        X_new = np.maximum(A_sym - lam * (G + G.T) / (2 * eta), 0.0)
        np.fill_diagonal(X_new, 0.0)
        if np.array_equal(X_new, X):
            break
        X = X_new
    return X


def solve_step_two(
    A: np.ndarray,
    prior,
    lam: float,
    eta: float,
    dual_iters: int = 20,
    dual_step: float | None = None,
    tol_sym: float = 1e-4,
    polish_iters: int = 50,
) -> np.ndarray:
    """Approximately solve ``min_{X >= 0, X = X^T} eta/2 ||X - A||^2 + lam S_H(X)``.

    Parameters
    ----------
    A : ndarray
        Square real matrix.
    prior : PriorConfig or ndarray
        The prior, or its ``(p, p-1)`` coefficient matrix.
    lam, eta : float
        Prior strength and quadratic weight.
    dual_iters, dual_step, tol_sym
        Dual decomposition budget, ascent step (default ``eta/4``) and
        stopping tolerance on the relative asymmetry.
    polish_iters : int
        Majorize-minimize sweeps applied to the symmetrized dual solution.
        The penalty is concave, so dual decomposition alone can stall with a
        nonzero asymmetry; the sweeps never raise the objective. A second
        sweep run starts from the clamped symmetric part of ``A`` and the
        lower of the two local solutions is returned.

    Returns
    -------
    ndarray
        Symmetric, nonnegative matrix with zero diagonal.
    """
    coef = prior.coefficient_matrix() if isinstance(prior, PriorConfig) else np.asarray(prior, dtype=float)
    A = np.asarray(A, dtype=float)
    p = A.shape[0]
    if A.shape != (p, p) or coef.shape != (p, p - 1):
        raise ValueError("shape mismatch between A and coefficients")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite input to step two")
    if lam < 0 or eta <= 0 or dual_iters < 1:
        raise ValueError("need lam >= 0, eta > 0, dual_iters >= 1")
    if lam == 0:
        return _symmetrize(A)
    step = eta / 4 if dual_step is None else dual_step
    tau = lam / eta
    off = ~np.eye(p, dtype=bool)
    D = np.zeros((p, p))  # B - B^T
    X = np.zeros((p, p))
    for _ in range(dual_iters):
        A_shift = A - D / eta
        rows = prox_rows(A_shift[off].reshape(p, p - 1), coef, tau)
        X = np.zeros((p, p))
        X[off] = rows.ravel()
        asym = X - X.T
        if np.linalg.norm(asym) / max(1.0, np.linalg.norm(X)) <= tol_sym:
            break
        D += 2 * step * asym
    A_sym = (A + A.T) / 2
    best, best_value = None, np.inf
    for start in (_symmetrize(X), _symmetrize(A)):
        cand = _polish(start, A_sym, coef, lam, eta, polish_iters)
        value = step_two_objective(cand, A, coef, lam, eta)
        if value < best_value:
            best, best_value = cand, value
    return best


def _offdiag_norm(R):
    R = R.copy()
    np.fill_diagonal(R, 0.0)
    return np.linalg.norm(R)


def warm_start(mask: ObservationMask, rho: float, rank: int, iters: int, seed=None) -> FactorPair:
    """Factors fitted to the weighted loss alone (no prior).

    Self-pairs are weighted like unobserved pairs here, since the weights
    must be positive.
    """
    M = build_loss_weights(mask, rho)
    np.fill_diagonal(M, rho / 2)
    wt = WeightedTarget(M, mask.matrix())
    factors = initial_factors(wt, rank, seed)
    if iters > 0:
        factors = factorize(wt, rank, iters=iters, init=factors)
    return factors


def fit(
    mask: ObservationMask,
    prior: PriorConfig | None,
    config: SolverConfig,
    init: FactorPair | None = None,
) -> FitResult:
    """Run the ADMM loop and return the final score matrix.

    The diagonal is excluded from the loss, the prior and the coupling
    constraint; the returned ``X`` has an exactly zero diagonal.

    The loop stops once the primal residual ``||U S U^T - X|| / max(1, ||X||)``
    is at most ``tol_primal``. The relative change of ``X`` per sweep is
    recorded as a dual residual but does not affect stopping.

    Unless ``init`` is given, the factors start from :func:`warm_start`
    and ``X`` from their reconstruction, so the loop begins at the
    prior-free fit. With a zero prior ``X`` equals ``U S U^T`` after one
    sweep, so the warm start is what fits the data in that case.
    Non-convergence within
    ``config.outer_iters`` is reported through ``FitResult.converged`` rather
    than raised.
    """
    p = mask.p
    if prior is not None and prior.degrees.p != p:
        raise ValueError("prior degrees do not match the mask size")
    lam = config.lam if prior is not None else 0.0
    coef = prior.coefficient_matrix() if prior is not None else np.ones((p, p - 1))
    eta = config.eta
    Omega = mask.matrix()
    M = build_loss_weights(mask, config.rho)
    W = M + eta / 2
    if init is None:
        init = warm_start(mask, config.rho, config.rank, config.warmup_iters, config.seed)
    factors = init
    X = factors.reconstruct()
    X_prev = X
    Z = np.zeros((p, p))
    residuals, dual_residuals = [], []
    converged = False
    it = 0
    for it in range(1, config.outer_iters + 1):
        Y = X - Z
        wt = WeightedTarget(W, (M * Omega + eta / 2 * Y) / W)
        factors = factorize(wt, config.rank, iters=config.inner_factorize_iters, init=factors)
        R = factors.reconstruct()
        A = R + Z
        X = solve_step_two(A, coef, lam, eta, config.dual_iters, config.step, config.tol_sym)
        # the diagonal is uncoupled: let X follow A there so it carries no residual
        np.fill_diagonal(X, np.diag(A))
        Z = Z + R - X
        scale = max(1.0, _offdiag_norm(X))
        res = _offdiag_norm(R - X) / scale
        dual = _offdiag_norm(X - X_prev) / scale
        X_prev = X
        residuals.append(float(res))
        dual_residuals.append(float(dual))
        if res <= config.tol_primal:
            converged = True
            break
    if not converged:
        log.info("ADMM stopped after %d iterations, residual %.3g", it, residuals[-1])
    X_out = _symmetrize(X)
    return FitResult(X_out, factors, converged, it, residuals, dual_residuals)
