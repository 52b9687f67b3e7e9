"""Prediction metrics and numeric diagnostics for the recovery-error theory."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph_data import Network, ObservationMask
from .pipeline import PredictionSet


@dataclass(frozen=True)
class EvaluationCurve:
    """Correct predictions (true, previously unobserved edges) per budget."""

    p: int
    ks: tuple
    correct: tuple

    @property
    def fractions(self) -> tuple:
        n_pairs = self.p * (self.p - 1) // 2
        return tuple(k / n_pairs for k in self.ks)


def ks_from_fractions(p: int, fractions) -> list[int]:
    """Budgets ``floor(f * p(p-1)/2)`` for fractions ``f`` of all pairs."""
    n_pairs = p * (p - 1) // 2
    return [int(math.floor(f * n_pairs)) for f in fractions]


def correct_curve(pred: PredictionSet, truth: Network, mask: ObservationMask, ks) -> EvaluationCurve:
    ks = [int(k) for k in ks]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be sorted ascending")
    if ks and (ks[0] < 0 or ks[-1] > len(pred)):
        raise ValueError(f"budget {ks[-1]} exceeds the {len(pred)} available predictions")
    hits = np.array([(e in truth.edges and e not in mask.observed) for e in pred.edges()], dtype=np.int64)
    cum = np.concatenate([[0], np.cumsum(hits)])
    return EvaluationCurve(truth.p, tuple(ks), tuple(int(cum[k]) for k in ks))


def default_release_k(p: int) -> int:
    return int(math.floor(0.05 * p * (p - 1) / 2))


def release_eval(old: Network, new: Network, pred: PredictionSet, K: int | None = None) -> float:
    """Share of edges new in ``new`` (within ``old``'s nodes) found in the
    top ``K`` predictions made from ``old``."""
    p = old.p
    if new.p < p:
        raise ValueError("newer release has fewer nodes than the older one")
    fresh = {(i, j) for i, j in new.edges if j < p} - old.edges
    if not fresh:
        raise ValueError("empty difference set: no new edges among the old nodes")
    if K is None:
        K = default_release_k(p)
    if K > len(pred):
        raise ValueError(f"K={K} exceeds the {len(pred)} available predictions")
    found = sum(1 for e in pred.edges(K) if e in fresh)
    return found / len(fresh)


def _threshold(X, q):
    return np.asarray(X, dtype=float) > q


def recovery_error(X: np.ndarray, truth: Network, q: float) -> int:
    """Off-diagonal positions where ``1[X > q]`` disagrees with the
    adjacency matrix; both symmetric positions are counted."""
    E = truth.adjacency() > 0
    wrong = _threshold(X, q) != E
    np.fill_diagonal(wrong, False)
    return int(wrong.sum())


def label_dependent_error(X: np.ndarray, mask: ObservationMask, rho: float, q: float) -> float:
    """Reweighted 0/1 error against the mask over ordered off-diagonal pairs.

    Missed observed pairs cost ``1 - rho/2``, predicted unobserved pairs
    cost ``rho/2``.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    T = _threshold(X, q)
    O = mask.matrix() > 0
    off = ~np.eye(mask.p, dtype=bool)
    missed = np.sum(~T & O & off)
    spurious = np.sum(T & ~O & off)
    return float((1 - rho / 2) * missed + (rho / 2) * spurious)


@dataclass(frozen=True)
class SlopeCheck:
    slope: float
    intercept: float
    recovery: tuple  # exact R per candidate
    expected_label_error: tuple  # Monte Carlo mean of R_rho per candidate


def label_error_slope_check(
    truth: Network,
    rho: float,
    q: float,
    candidates,
    n_samples: int = 10_000,
    seed: int = 0,
) -> SlopeCheck:
    """Regress the Monte Carlo mean of ``R_rho`` on the exact ``R``.

    Each sample keeps every true edge independently with probability ``rho``.
    Candidates are fixed matrices, so the same draws are reused for all of
    them. The fitted slope should be close to ``rho / 2``.
    """
    if len(candidates) < 3:
        raise ValueError("need at least 3 candidate matrices")
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    R = np.array([recovery_error(X, truth, q) for X in candidates], dtype=float)
    if np.ptp(R) == 0:
        raise ValueError("all candidates have the same recovery error")

    edges = truth.sorted_edges()
    rows = np.array([u for u, _ in edges], dtype=np.int64)
    cols = np.array([v for _, v in edges], dtype=np.int64)
    rng = np.random.default_rng(seed)
    kept = rng.random((n_samples, len(edges))) < rho  # one row per sampled mask
    off = ~np.eye(truth.p, dtype=bool)

    means = []
    for X in candidates:
        T = _threshold(X, q)
        on_edge = T[rows, cols]  # symmetric candidates assumed; both positions agree
        predicted = int(np.sum(T & off))
        # per sample: observed pairs thresholded to 0 and to 1 (two positions each)
        miss = 2 * (kept & ~on_edge).sum(axis=1)
        hit = 2 * (kept & on_edge).sum(axis=1)
        r_rho = (1 - rho / 2) * miss + (rho / 2) * (predicted - hit)
        means.append(float(r_rho.mean()))
    slope, intercept = np.polyfit(R, np.array(means), 1)
    return SlopeCheck(float(slope), float(intercept), tuple(R.tolist()), tuple(means))


def q_limit(rho: float) -> float:
    return (2 - rho) / (3 - 2 * rho)


def gamma(q: float, rho: float) -> float:
    """``max(1/q^2, 1/((3 - 2 rho)(q - (2 - rho)/(3 - 2 rho))^2))``."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    if not 0.0 < q < q_limit(rho):
        raise ValueError(f"q must lie in (0, {q_limit(rho)})")
    return max(1 / q**2, 1 / ((3 - 2 * rho) * (q - q_limit(rho)) ** 2))


@dataclass(frozen=True)
class BoundInputs:
    t: float
    r: float
    s: float
    d_star_max: float
    d_max: float
    alpha: float
    rho: float
    q: float
    delta: float
    C_universal: float = 1.0

    def __post_init__(self):
        for name in ("t", "r", "s", "d_star_max", "d_max", "alpha", "rho", "q", "delta", "C_universal"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.rho > 1:
            raise ValueError("rho must lie in (0, 1]")
        if not self.q < q_limit(self.rho):
            raise ValueError(f"q must be below (2 - rho)/(3 - 2 rho) = {q_limit(self.rho)}")
        # delta = 2 is admitted as the point where the deviation term vanishes
        if not self.delta <= 2:
            raise ValueError("delta must lie in (0, 2]")


@dataclass(frozen=True)
class BoundResult:
    gamma: float
    A: float
    B: float
    deviation: float
    bound: float


def bound_value(inputs: BoundInputs) -> BoundResult:
    """Recovery-error bound and its components.

    ``A = t C (2 sqrt(d*_max) + s^(1/4))``, ``B = r log2(d_max + 1)^alpha``,
    ``deviation = sqrt(s ln(2/delta) / 2)`` and
    ``bound = 4 gamma (2 - rho)/rho * (2 min(A, B) + deviation)``.
    """
    g = gamma(inputs.q, inputs.rho)
    A = inputs.t * inputs.C_universal * (2 * math.sqrt(inputs.d_star_max) + inputs.s**0.25)
    B = inputs.r * math.log2(inputs.d_max + 1) ** inputs.alpha
    deviation = math.sqrt(inputs.s * math.log(2 / inputs.delta) / 2)
    bound = 4 * g * (2 - inputs.rho) / inputs.rho * (2 * min(A, B) + deviation)
    return BoundResult(g, A, B, deviation, bound)
