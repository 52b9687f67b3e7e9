"""End-to-end inference: degree estimation, method dispatch, top-K
extraction and cross-validation."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .admm_solver import FitResult, SolverConfig, fit
from .degree_prior import DegreeTarget, PriorConfig
from .graph_data import ObservationMask, ceil_fraction, observed_degrees

METHODS = ("tri", "tri_l1", "tri_degree")


def estimate_degrees(o, K: int) -> np.ndarray:
    """``d_i = ceil(2 o_i K / sum(o))``, floored at 1 for unobserved nodes."""
    o = np.asarray(o, dtype=np.int64)
    total = int(o.sum())
    if total <= 0:
        raise ValueError("cannot estimate degrees from an empty observation")
    if K < 1:
        raise ValueError("K must be >= 1")
    # exact integer ceiling of 2*o*K/total
    d = -((-2 * o * K) // total)
    return np.maximum(d, 1)


def amplify(d, c: float, p: int) -> np.ndarray:
    """``min(ceil(c d_i), p - 1)``."""
    if c < 1:
        raise ValueError("amplification factor must be >= 1")
    d = np.asarray(d, dtype=np.int64)
    return np.minimum(np.ceil(c * d).astype(np.int64), p - 1)


def make_degree_target(mask: ObservationMask, n_edges: int, c: float) -> DegreeTarget:
    d = estimate_degrees(observed_degrees(mask), n_edges)
    return DegreeTarget(d, amplify(d, c, mask.p))


@dataclass(frozen=True)
class Hyperparameters:
    rho: float = 0.3
    lam: float = 0.1
    c: float = 1.0
    alpha: float = 1.0


@dataclass(frozen=True)
class HyperGrid:
    rho_values: tuple = (0.1, 0.3, 0.5)
    lambda_values: tuple = (0.01, 0.1, 1.0)
    c_values: tuple = (1.0, 1.5, 2.0)
    alpha_values: tuple = (0.5, 1.0, 2.0)
    holdout_fraction: float = 0.1
    n_seeds: int = 5

    def __post_init__(self):
        for name in ("rho_values", "lambda_values", "c_values", "alpha_values"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, values)
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in (0, 1)")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")

    def cells(self) -> list[Hyperparameters]:
        """All grid cells in a fixed order."""
        return [
            Hyperparameters(rho, lam, c, alpha)
            for rho, lam, c, alpha in itertools.product(
                self.rho_values, self.lambda_values, self.c_values, self.alpha_values
            )
        ]

    @property
    def size(self) -> int:
        return len(self.rho_values) * len(self.lambda_values) * len(self.c_values) * len(self.alpha_values)


@dataclass(frozen=True)
class PredictionSet:
    """Unobserved pairs ``(i, j, score)`` with ``i < j``, best first."""

    pairs: tuple

    def __len__(self):
        return len(self.pairs)

    def edges(self, k: int | None = None) -> list[tuple[int, int]]:
        chosen = self.pairs if k is None else self.pairs[:k]
        return [(i, j) for i, j, _ in chosen]

    def scores(self) -> np.ndarray:
        return np.array([s for _, _, s in self.pairs], dtype=float)


def rank_unobserved(X: np.ndarray, mask: ObservationMask, K: int) -> PredictionSet:
    """Top ``K`` unobserved upper-triangular entries of ``X``.

    Sorted by descending score, then by ``(i, j)``.
    """
    p = mask.p
    iu, ju = np.triu_indices(p, 1)
    free = mask.matrix()[iu, ju] == 0
    iu, ju = iu[free], ju[free]
    if K > iu.size:
        raise ValueError(f"K={K} exceeds the {iu.size} unobserved pairs")
    scores = X[iu, ju]
    # triu_indices is already lexicographic, so a stable sort keeps (i, j) order on ties
    order = np.argsort(-scores, kind="stable")[:K]
    return PredictionSet(tuple((int(iu[t]), int(ju[t]), float(scores[t])) for t in order))


def max_predictions(mask: ObservationMask) -> int:
    return mask.p * (mask.p - 1) // 2 - mask.n_observed


@dataclass
class InferenceResult:
    predictions: PredictionSet
    fit: FitResult
    prior: PriorConfig | None


def build_prior(mask: ObservationMask, method: str, hyper: Hyperparameters, n_edges: int) -> PriorConfig | None:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if method == "tri":
        return None
    target = make_degree_target(mask, n_edges, hyper.c)
    alpha = 0.0 if method == "tri_l1" else hyper.alpha
    return PriorConfig(alpha, hyper.c, target)


def run_method(
    mask: ObservationMask,
    K: int,
    method: str,
    hyper: Hyperparameters,
    seed: int = 0,
    n_edges: int | None = None,
    solver: SolverConfig | None = None,
) -> InferenceResult:
    """Fit ``method`` on ``mask`` and rank the unobserved pairs.

    ``n_edges`` is the total edge count used for degree estimation; it
    defaults to ``mask.n_observed + K``.
    """
    limit = max_predictions(mask)
    if not 1 <= K <= limit:
        raise ValueError(f"K={K} must lie in [1, {limit}] (unobserved pairs)")
    if n_edges is None:
        n_edges = mask.n_observed + K
    prior = build_prior(mask, method, hyper, n_edges)
    base = solver if solver is not None else SolverConfig()
    config = replace(base, rho=hyper.rho, lam=0.0 if prior is None else hyper.lam, seed=seed)
    result = fit(mask, prior, config)
    return InferenceResult(rank_unobserved(result.X, mask, K), result, prior)


def infer(
    mask: ObservationMask,
    K: int,
    method: str,
    hyper: Hyperparameters,
    seed: int = 0,
    n_edges: int | None = None,
    solver: SolverConfig | None = None,
) -> PredictionSet:
    """Top-``K`` predicted edges among the unobserved pairs."""
    return run_method(mask, K, method, hyper, seed, n_edges, solver).predictions


@dataclass
class CVResult:
    best: Hyperparameters
    rows: list  # (rho, lambda, c, alpha, seed, score), grid order then split
    means: dict  # Hyperparameters -> mean score


def holdout_split(mask: ObservationMask, fraction: float, seed: int) -> tuple[ObservationMask, frozenset]:
    """Remove ``ceil(fraction * |observed|)`` observed pairs at random."""
    pairs = mask.sorted_pairs()
    n_tune = ceil_fraction(fraction, len(pairs))
    if n_tune < 1:
        raise ValueError("holdout yields no tuning edges")
    if n_tune >= len(pairs):
        raise ValueError("holdout leaves an empty training set")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pairs), size=n_tune, replace=False)
    tune = frozenset(pairs[t] for t in picked)
    return ObservationMask(mask.p, mask.observed - tune), tune


def _effective(method: str, hyper: Hyperparameters) -> Hyperparameters:
    # parameters a method ignores are normalised so equal fits are shared
    if method == "tri":
        return Hyperparameters(hyper.rho, 0.0, 1.0, 0.0)
    if method == "tri_l1":
        return Hyperparameters(hyper.rho, hyper.lam, 1.0, 0.0)
    return hyper


def _score_cell(args):
    train, tune, method, hyper, seed, n_edges, solver = args
    pred = infer(train, len(tune), method, hyper, seed, n_edges, solver)
    return sum(1 for e in pred.edges() if e in tune)


def worker_count() -> int:
    env = os.environ.get("DEGREEPRIOR_THREADS")
    cap = os.cpu_count() or 1
    if env:
        cap = min(cap, max(1, int(env)))
    return cap


def cross_validate(
    mask: ObservationMask,
    K: int,
    grid: HyperGrid,
    method: str = "tri_degree",
    seed: int = 0,
    n_edges: int | None = None,
    solver: SolverConfig | None = None,
    workers: int | None = None,
) -> CVResult:
    """Grid search by held-out edge recovery.

    Split ``s`` uses seed ``seed + s`` for both the holdout draw and the
    solver, so every cell sees the same splits. A cell's score on a split is
    the number of tuning edges among its top ``|tuning|`` predictions. The
    best cell has the highest mean; ties go to the smaller
    ``(lambda, c, alpha, rho)``.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if n_edges is None:
        n_edges = mask.n_observed + K
    splits = [holdout_split(mask, grid.holdout_fraction, seed + s) for s in range(grid.n_seeds)]
    cells = grid.cells()
    jobs = {}
    for cell in cells:
        eff = _effective(method, cell)
        for s, (train, tune) in enumerate(splits):
            jobs.setdefault((eff, s), (train, tune, method, eff, seed + s, n_edges, solver))
    keys = list(jobs)
    n_workers = worker_count() if workers is None else max(1, workers)
    if n_workers > 1 and len(keys) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            scores = list(pool.map(_score_cell, [jobs[k] for k in keys]))
    else:
        scores = [_score_cell(jobs[k]) for k in keys]
    score_of = dict(zip(keys, scores))

    rows, means = [], {}
    for cell in cells:
        eff = _effective(method, cell)
        cell_scores = [score_of[(eff, s)] for s in range(grid.n_seeds)]
        for s, value in enumerate(cell_scores):
            rows.append((cell.rho, cell.lam, cell.c, cell.alpha, seed + s, value))
        means[cell] = float(np.mean(cell_scores))
    best = min(cells, key=lambda h: (-means[h], h.lam, h.c, h.alpha, h.rho))
    return CVResult(best, rows, means)
