import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degreeprior.degree_prior import (
    DegreeTarget,
    PriorConfig,
    coefficient_gap,
    coefficient_gap_bound,
    coefficient_matrix,
    coefficients,
    evaluate_prior,
    evaluate_prior_config,
    h_value,
    is_graphical,
    rearrange,
    top_k_degrees,
)


def loop_prior(X, degrees, alpha):
    # independent double loop over rows and ranks
    p = len(X)
    total = 0.0
    for i in range(p):
        row = sorted((X[i][j] for j in range(p) if j != i), reverse=True)
        for k, value in enumerate(row, start=1):
            b = 1.0 if alpha <= 1e-6 else (math.log(k + 1) / math.log(degrees[i] + 1)) ** alpha
            total += b * value
    return total


def sym(rng, p):
    X = np.triu(rng.random((p, p)), 1)
    return X + X.T


def test_h_value():
    assert h_value(1) == pytest.approx(math.log(2))
    assert np.allclose(h_value(np.array([1, 3])), np.log([2, 4]))
    with pytest.raises(ValueError):
        h_value(0)


def test_coefficients_examples():
    assert coefficients(1, 1.0, 3).tolist() == pytest.approx([1.0, math.log(3) / math.log(2)])
    b = coefficients(3, 2.0, 6)
    assert b[2] == pytest.approx(1.0)
    assert np.all(np.diff(b) > 0)
    assert np.array_equal(coefficients(4, 1e-6, 7), np.ones(6))
    with pytest.raises(ValueError):
        coefficients(0, 1.0, 5)
    with pytest.raises(ValueError):
        coefficients(5, 1.0, 5)


def test_coefficient_matrix_rows():
    M = coefficient_matrix([1, 2, 3, 1], 1.5)
    for i, d in enumerate([1, 2, 3, 1]):
        assert np.allclose(M[i], coefficients(d, 1.5, 4))


def test_prior_example_values():
    X = np.array([[0, 1, 0.5], [1, 0, 0.2], [0.5, 0.2, 0]])
    assert evaluate_prior(X, [1, 1, 1], 0.0) == pytest.approx(2 * (1 + 0.5 + 0.2))
    r = math.log(3) / math.log(2)
    assert evaluate_prior(X, [1, 1, 1], 1.0) == pytest.approx(1 + 0.5 * r + 1 + 0.2 * r + 0.5 + 0.2 * r)


def test_prior_matches_double_loop():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = int(rng.integers(2, 12))
        X = sym(rng, p)
        d = rng.integers(1, p, size=p)
        alpha = float(rng.uniform(0, 4))
        assert evaluate_prior(X, d, alpha) == pytest.approx(loop_prior(X.tolist(), d, alpha), rel=1e-12)


def test_prior_relabel_invariant():
    rng = np.random.default_rng(1)
    X = sym(rng, 9)
    d = rng.integers(1, 9, size=9)
    perm = rng.permutation(9)
    assert evaluate_prior(X[np.ix_(perm, perm)], d[perm], 2.0) == pytest.approx(evaluate_prior(X, d, 2.0))


def test_prior_tie_invariant():
    X = np.ones((5, 5)) - np.eye(5)
    assert evaluate_prior(X, [2] * 5, 1.0) == pytest.approx(loop_prior(X.tolist(), [2] * 5, 1.0))


def test_prior_config_and_checks():
    target = DegreeTarget(np.array([1, 2, 1]), np.array([1, 2, 2]))
    cfg = PriorConfig(1.0, 1.5, target)
    X = np.array([[0, 1, 0.5], [1, 0, 0.2], [0.5, 0.2, 0]])
    assert evaluate_prior_config(X, cfg) == pytest.approx(evaluate_prior(X, [1, 2, 2], 1.0))
    assert PriorConfig(1e-7, 1.0, target).is_l1
    with pytest.raises(ValueError):
        PriorConfig(1.0, 0.5, target)
    with pytest.raises(ValueError):
        DegreeTarget(np.array([1, 1]), np.array([1, 2]))
    with pytest.raises(ValueError):
        evaluate_prior(np.array([[0, 1], [0.5, 0]]), [1, 1], 1.0)
    with pytest.raises(ValueError):
        evaluate_prior(np.array([[0, -1], [-1, 0]]), [1, 1], 1.0)


def test_is_graphical():
    assert is_graphical([1, 1])
    assert is_graphical([3, 3, 3, 3])
    assert not is_graphical([3, 3, 1, 1])
    assert not is_graphical([1, 1, 1])


def test_top_k_degrees():
    X = np.array([[0, 3, 2, 0], [3, 0, 1, 0], [2, 1, 0, 0], [0, 0, 0, 0.0]])
    assert top_k_degrees(X, 2).tolist() == [2, 1, 1, 0]


def check_rearrangement(X, d, K, alpha):
    Xs = rearrange(X, d, K, alpha)
    iu = np.triu_indices(len(d), 1)
    assert np.array_equal(np.sort(Xs[iu]), np.sort(X[iu]))
    assert np.array_equal(Xs, Xs.T)
    assert np.array_equal(top_k_degrees(Xs, K), d)
    return Xs


def test_rearrange_matching():
    X = np.array([[0, 5, 4, 1], [5, 0, 3, 2], [4, 3, 0, 6], [1, 2, 6, 0.0]])
    d = np.array([1, 1, 1, 1])
    Xs = check_rearrangement(X, d, 2, 1.0)
    assert evaluate_prior(Xs, d, 1.0) <= evaluate_prior(X, d, 1.0) + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_rearrange_properties(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(4, 12))
    while True:
        K = int(rng.integers(p // 2 + 1, p * (p - 1) // 2 + 1))
        iu, ju = np.triu_indices(p, 1)
        pick = rng.choice(iu.size, size=K, replace=False)
        d = np.bincount(np.concatenate([iu[pick], ju[pick]]), minlength=p)
        if d.min() >= 1:
            break
    alpha = float(rng.uniform(0.05, 4))
    X = sym(rng, p)
    Xs = check_rearrangement(X, d, K, alpha)
    assert evaluate_prior(Xs, d, alpha) <= evaluate_prior(X, d, alpha) + 1e-9


def _best_arrangement(X, d, K, alpha):
    p = len(d)
    pairs = list(itertools.combinations(range(p), 2))
    vals = [X[i, j] for i, j in pairs]
    best = math.inf
    for perm in itertools.permutations(vals):
        Y = np.zeros((p, p))
        for (i, j), v in zip(pairs, perm):
            Y[i, j] = Y[j, i] = v
        if np.array_equal(top_k_degrees(Y, K), d):
            best = min(best, evaluate_prior(Y, d, alpha))
    return best


@pytest.mark.parametrize(
    "d, alpha, vals",
    [
        (
            [3, 2, 2, 3],
            1.5992310847687903,
            [0.3176618767424868, 0.2845855320182411, 0.9824284026335174,
             0.6324076273606508, 0.3041464669625409, 0.36047104998963375],
        ),
        (
            [3, 3, 2, 2],
            0.1987122166233633,
            [0.9828029193151762, 0.11010854365358924, 0.3989988969699323,
             0.49133890423410875, 0.09511003525620476, 0.6794543273709461],
        ),
    ],
)
def test_penalty_can_increase_for_every_arrangement(d, alpha, vals):
    # exhaustive search: no arrangement with top-K degrees d keeps the penalty
    # at or below that of X, so rearrange cannot either
    p, d = 4, np.array(d)
    X = np.zeros((p, p))
    for (i, j), v in zip(itertools.combinations(range(p), 2), vals):
        X[i, j] = X[j, i] = v
    K = int(d.sum()) // 2
    base = evaluate_prior(X, d, alpha)
    best = _best_arrangement(X, d, K, alpha)
    assert best > base + 1e-6
    Xs = check_rearrangement(X, d, K, alpha)
    assert evaluate_prior(Xs, d, alpha) == pytest.approx(best, abs=1e-12)


@pytest.mark.parametrize(
    "d, K",
    [([1, 1, 1], 1), ([2, 2, 0], 2), ([2, 2, 2, 2], 3), ([3, 3, 1, 1], 4)],
)
def test_rearrange_rejects_infeasible(d, K):
    X = sym(np.random.default_rng(0), len(d))
    with pytest.raises(ValueError, match="infeasible"):
        rearrange(X, d, K, 1.0)


def test_coefficient_gap_examples():
    assert coefficient_gap(1, 0, 3, 1.0) == 0.0
    assert coefficient_gap(1, 1, 1, 1.0) == pytest.approx(math.log(3) / math.log(2) - 1)
    for t, delta, d, alpha in [(1, 1, 3, 1.0), (4, 3, 5, 0.5), (2, 6, 2, 0.3)]:
        assert coefficient_gap(t, delta, d, alpha) <= coefficient_gap_bound(delta, d, alpha)
    with pytest.raises(ValueError):
        coefficient_gap(3, 2, 3, 1.0, p=5)


def test_coefficient_gap_bound_fails_above_one():
    gap = coefficient_gap(1, 1, 1, 2.0)
    assert gap == pytest.approx((math.log(3) / math.log(2)) ** 2 - 1)
    assert gap > coefficient_gap_bound(1, 1, 2.0)
