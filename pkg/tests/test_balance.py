import math

import numpy as np
import pytest
from scipy.stats import binomtest

from qmctransfer.balance import (
    Coloring,
    WalkConfig,
    WalkFailure,
    balanced_coloring,
    self_balancing_walk,
)
from qmctransfer.dyadic import SparseIncidence


def unit(coord: int, dim: int = 8, w: float = 1.0) -> SparseIncidence:
    return SparseIncidence({coord: w}, dim)


def test_strict_lambda_formula():
    cfg = WalkConfig(lambda_mode="strict", delta=0.5)
    assert cfg.lambda_for(2, m=1) == pytest.approx(30 * math.log(4))


def test_zero_alignment_is_fair_coin():
    # 10000 walk steps with w orthogonal to every vector: each sign is an
    # independent Bernoulli(1/2)
    vectors = [unit(i, dim=10000) for i in range(10000)]
    col = self_balancing_walk(vectors, WalkConfig(rng_seed=77))
    ones = int(np.sum(col.signs == 1))
    assert abs(col.signs.mean()) <= 0.05
    assert binomtest(ones, 10000, 0.5).pvalue > 0.001


def test_single_vector_mean_over_seeds():
    cfg_template = [unit(0, dim=1)]
    total = 0
    trials = 2000
    for seed in range(trials):
        col = self_balancing_walk(cfg_template, WalkConfig(rng_seed=seed))
        total += int(col.signs[0])
    assert abs(total / trials) <= 0.05


def test_greedy_flips_aligned_vector():
    vectors = [unit(0), unit(0)]
    for seed in range(20):
        col = self_balancing_walk(vectors, WalkConfig(lam=1e-3, rng_seed=seed))
        assert col.signs[1] == -col.signs[0]  # forced flip, w back to zero


def test_strict_small_case_never_fails():
    vectors = [unit(0, dim=1), unit(0, dim=1)]
    cfg = WalkConfig(lambda_mode="strict", delta=0.5, m=1)
    for seed in range(50):
        col = self_balancing_walk(vectors, cfg, rng=seed)
        assert set(np.unique(col.signs)) <= {-1, 1}


def test_strict_failure_on_norm_violation():
    # caller breaks the norm-<=-1 precondition: the drift check must trip
    vectors = [unit(0, w=30.0), unit(0, w=30.0)]
    cfg = WalkConfig(lambda_mode="strict", delta=0.5, m=1)
    with pytest.raises(WalkFailure) as err:
        self_balancing_walk(vectors, cfg)
    assert err.value.step == 1


def test_greedy_drift_bound_and_kernel_agreement():
    # independent trace of the one-coordinate walk, checked against the
    # kernel's signs; |<w, v>| can never exceed 1 + lambda
    lam = 1e-3
    n = 257
    vectors = [unit(0) for _ in range(n)]
    col = self_balancing_walk(vectors, WalkConfig(lam=lam, rng_seed=123))

    from qmctransfer._walk_py import _SplitMix

    rng = _SplitMix(123)
    w = 0.0
    for j in range(n):
        if abs(w) > lam:
            c = -1 if w > 0 else 1
        else:
            p = min(max(0.5 - w / (2 * lam), 0.0), 1.0)
            c = 1 if rng.next_uniform() < p else -1
        assert col.signs[j] == c
        w += c
        assert abs(w) <= 1 + lam


def test_balanced_coloring_examples():
    pair = [unit(0), unit(0)]
    for seed in range(10):
        col = balanced_coloring(pair, WalkConfig(rng_seed=seed))
        assert col.balanced and int(col.signs.sum()) == 0

    four = [unit(0)] * 4
    col = balanced_coloring(four, WalkConfig(rng_seed=3))
    assert int(col.signs.sum()) == 0
    assert sorted(col.signs[:2].tolist()) == [-1, 1]
    assert sorted(col.signs[2:].tolist()) == [-1, 1]

    # 2^k identical vectors: the signed sum vanishes exactly
    many = [unit(0)] * 64
    for seed in (0, 1, 2):
        col = balanced_coloring(many, WalkConfig(rng_seed=seed))
        assert int(col.signs.sum()) == 0


def test_balanced_coloring_randomized_balance():
    rng = np.random.default_rng(42)
    for trial in range(50):
        n = 2 * int(rng.integers(1, 40))
        dim = int(rng.integers(2, 30))
        vectors = []
        for _ in range(n):
            nnz = int(rng.integers(1, min(dim, 5) + 1))
            coords = rng.choice(dim, size=nnz, replace=False)
            vectors.append(
                SparseIncidence(
                    {int(c): float(w) for c, w in
                     zip(coords, rng.uniform(0.1, 1.0, nnz))},
                    dim,
                )
            )
        col = balanced_coloring(vectors, WalkConfig(rng_seed=trial))
        assert col.balanced and int(col.signs.sum()) == 0


def test_odd_length_rejected():
    with pytest.raises(ValueError):
        balanced_coloring([unit(0)], WalkConfig())


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        self_balancing_walk([unit(0, dim=4), unit(0, dim=5)], WalkConfig())


def test_determinism_and_seed_sensitivity():
    rng = np.random.default_rng(7)
    vectors = [
        SparseIncidence({int(i): 0.5, int(i + 50): 0.25}, 100)
        for i in rng.integers(0, 50, size=40)
    ]
    a = balanced_coloring(vectors, WalkConfig(rng_seed=9))
    b = balanced_coloring(vectors, WalkConfig(rng_seed=9))
    assert np.array_equal(a.signs, b.signs)
    c = balanced_coloring(vectors, WalkConfig(rng_seed=10))
    assert not np.array_equal(a.signs, c.signs)


def test_pre_shuffle_still_balances():
    vectors = [unit(i % 3, dim=3) for i in range(16)]
    col = balanced_coloring(vectors, WalkConfig(rng_seed=5, pre_shuffle=True))
    assert col.balanced and int(col.signs.sum()) == 0


def test_coloring_validation():
    with pytest.raises(ValueError):
        Coloring(np.array([1, 2], dtype=np.int8), balanced=False)
    with pytest.raises(ValueError):
        Coloring(np.array([1, 1], dtype=np.int8), balanced=True)
