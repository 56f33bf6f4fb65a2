import numpy as np
import pytest
from scipy.stats import norm

from sabc import c2st, mmd


class TestMMD:
    def test_identical_samples_give_zero(self):
        x = np.random.default_rng(0).standard_normal((500, 2))
        assert mmd(x, x) == 0.0

    def test_exact_symmetry(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((400, 2))
        y = rng.standard_normal((300, 2)) + 1.0
        assert mmd(x, y) == mmd(y, x)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((200, 3))
        y = rng.standard_normal((200, 3)) + 0.5
        xp = x[rng.permutation(200)]
        yp = y[rng.permutation(200)]
        assert mmd(x, y) == mmd(xp, yp)

    def test_null_below_permutation_quantile(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1000, 2))
        y = rng.standard_normal((1000, 2))
        observed = mmd(x, y)
        pooled = np.concatenate([x, y])
        null = []
        for _ in range(200):
            perm = rng.permutation(2000)
            null.append(mmd(pooled[perm[:1000]], pooled[perm[1000:]]))
        assert observed < np.quantile(null, 0.99)

    def test_separated_samples_above_null(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((1000, 1))
        y = rng.standard_normal((1000, 1)) + 3.0
        observed = mmd(x, y)
        pooled = np.concatenate([x, y])
        null = []
        for _ in range(100):
            perm = rng.permutation(2000)
            null.append(mmd(pooled[perm[:1000]], pooled[perm[1000:]]))
        assert observed > np.quantile(null, 0.99)

    def test_shape_errors(self):
        x = np.zeros((10, 2))
        with pytest.raises(ValueError):
            mmd(x, np.zeros((10, 3)))
        with pytest.raises(ValueError):
            mmd(x, np.zeros((0, 2)))


class TestC2ST:
    def test_chance_level_for_same_distribution(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((10_000, 2))
        y = rng.standard_normal((10_000, 2))
        assert 0.45 <= c2st(x, y) <= 0.55

    def test_split_of_one_sample_is_chance(self):
        rng = np.random.default_rng(6)
        z = rng.standard_normal((4000, 2))
        assert 0.45 <= c2st(z[:2000], z[2000:]) <= 0.55

    def test_disjoint_supports_separable(self):
        rng = np.random.default_rng(7)
        x = rng.random((2000, 2))
        y = rng.random((2000, 2)) + 10.0
        assert c2st(x, y) > 0.99

    def test_gaussian_shift_matches_bayes_accuracy(self):
        # the optimal classifier for N(0,1) vs N(1,1) scores Phi(1/2)
        rng = np.random.default_rng(8)
        x = rng.standard_normal((10_000, 1))
        y = rng.standard_normal((10_000, 1)) + 1.0
        assert c2st(x, y) == pytest.approx(norm.cdf(0.5), abs=0.03)

    def test_size_guards(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((1000, 1))
        with pytest.raises(ValueError):
            c2st(x[:500], x[:500])
        with pytest.raises(ValueError):
            c2st(x, rng.standard_normal((1200, 1)))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((1500, 2))
        y = rng.standard_normal((1500, 2)) + 0.3
        assert c2st(x, y, seed=3) == c2st(x, y, seed=3)
