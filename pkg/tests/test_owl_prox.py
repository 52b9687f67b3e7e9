import itertools

import numpy as np
import pytest
from scipy.optimize import isotonic_regression

from degreeprior.owl_prox import (
    ProxProblem,
    pool_adjacent_violators,
    prox,
    prox_objective,
    prox_rows,
)


def brute_force(problem):
    """Best order-constrained fit over all n! rankings."""
    a, b, tau = problem.a, problem.b, problem.tau
    best, best_x = np.inf, None
    for perm in itertools.permutations(range(a.size)):
        perm = np.array(perm)
        fit = isotonic_regression(a[perm] - tau * b, increasing=False).x
        x = np.empty_like(a)
        x[perm] = np.maximum(fit, 0.0)
        value = prox_objective(problem, x)
        if value < best:
            best, best_x = value, x
    return best, best_x


def random_problem(rng, n=None):
    n = int(rng.integers(1, 7)) if n is None else n
    a = rng.normal(size=n) * rng.choice([0.5, 2.0])
    if rng.random() < 0.3:
        a = np.round(a, 1)  # force ties
    b = np.sort(rng.random(n) * 2)
    return ProxProblem(a, b, float(rng.uniform(0, 2)))


def test_pav_examples():
    assert pool_adjacent_violators(np.array([3.0, 1.0, 2.0])).tolist() == pytest.approx([3, 1.5, 1.5])
    assert pool_adjacent_violators(np.array([1.0, 2.0, 3.0])).tolist() == pytest.approx([2, 2, 2])
    y = np.array([5.0, 4.0, 1.0])
    assert np.array_equal(pool_adjacent_violators(y), y)


def test_pav_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(100):
        y = rng.normal(size=int(rng.integers(1, 30)))
        assert np.allclose(pool_adjacent_violators(y), isotonic_regression(y, increasing=False).x)


def test_prox_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        problem = random_problem(rng)
        best, _ = brute_force(problem)
        x = prox(problem)
        assert np.all(x >= 0)
        assert prox_objective(problem, x) <= best + 1e-9


def test_prox_example():
    # the largest entry takes the smallest weight; the last entry clamps to 0
    x = prox(ProxProblem(np.array([3.0, 3.5, 0.2]), np.array([0.1, 0.5, 0.6]), 1.0))
    assert x.tolist() == pytest.approx([2.5, 3.4, 0.0])


def test_prox_keeps_order_of_input():
    rng = np.random.default_rng(1)
    for _ in range(50):
        problem = random_problem(rng, n=8)
        x = prox(problem)
        a = problem.a
        for i, j in itertools.combinations(range(a.size), 2):
            if a[i] > a[j]:
                assert x[i] >= x[j] - 1e-12


def test_prox_zero_tau_is_clamp():
    a = np.array([1.0, -2.0, 0.5, -0.1])
    assert np.array_equal(prox(ProxProblem(a, np.arange(4.0), 0.0)), np.maximum(a, 0))


def test_prox_shrinks_with_tau():
    rng = np.random.default_rng(2)
    problem = random_problem(rng, n=6)
    prev = prox(problem)
    for tau in np.linspace(problem.tau, problem.tau + 3, 7)[1:]:
        x = prox(ProxProblem(problem.a, problem.b, tau))
        assert np.all(x <= prev + 1e-12)
        prev = x


def test_prox_rows_matches_prox():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(7, 9))
    B = np.sort(rng.random((7, 9)), axis=1)
    X = prox_rows(A, B, 0.7)
    for r in range(7):
        assert np.allclose(X[r], prox(ProxProblem(A[r], B[r], 0.7)))


@pytest.mark.parametrize(
    "a, b, tau",
    [([1.0, 2.0], [0.5], 1.0), ([1.0, 2.0], [1.0, 0.5], 1.0), ([1.0], [-1.0], 1.0), ([1.0], [1.0], -1.0)],
)
def test_problem_validation(a, b, tau):
    with pytest.raises(ValueError):
        ProxProblem(np.array(a), np.array(b), tau)


def test_objective_validation():
    problem = ProxProblem(np.zeros(2), np.ones(2), 1.0)
    with pytest.raises(ValueError):
        prox_objective(problem, [1.0])
    with pytest.raises(ValueError):
        prox_objective(problem, [1.0, -1.0])
