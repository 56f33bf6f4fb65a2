"""Two-sample discrepancies between posterior samples.

``mmd`` is the squared maximum mean discrepancy with a Gaussian kernel whose
bandwidth is the median pairwise distance of the pooled sample (computed on a
canonically ordered subsample, so swapping the arguments changes nothing).
``c2st`` is a cross-validated nearest-neighbour classifier accuracy: 0.5
means the two samples are indistinguishable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

__all__ = ["mmd", "c2st"]

_MEDIAN_SUBSAMPLE = 4096
_CHUNK = 512


def _median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    pooled = np.concatenate([x, y], axis=0)
    # canonical row order makes the bandwidth symmetric in (x, y) and
    # invariant to row permutations within either sample
    order = np.lexsort(tuple(pooled[:, j] for j in reversed(range(pooled.shape[1]))))
    pooled = pooled[order]
    if pooled.shape[0] > _MEDIAN_SUBSAMPLE:
        pick = np.linspace(0, pooled.shape[0] - 1, _MEDIAN_SUBSAMPLE).astype(int)
        pooled = pooled[pick]
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def _mean_kernel(a: np.ndarray, b: np.ndarray, h: float) -> float:
    """Mean Gaussian kernel value over all pairs, chunked to bound memory."""
    gamma = 0.5 / (h * h)
    total = 0.0
    b_sq = np.sum(b**2, axis=1)
    for lo in range(0, a.shape[0], _CHUNK):
        block = a[lo : lo + _CHUNK]
        d2 = np.sum(block**2, axis=1)[:, None] + b_sq[None, :] - 2.0 * (block @ b.T)
        total += float(np.exp(-gamma * np.maximum(d2, 0.0)).sum())
    return total / (a.shape[0] * b.shape[0])


def mmd(x: np.ndarray, y: np.ndarray) -> float:
    """Squared maximum mean discrepancy (biased V-statistic), >= 0.

    mmd(x, x) is exactly zero and mmd(x, y) == mmd(y, x) exactly.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("mmd needs non-empty samples")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    h = _median_bandwidth(x, y)
    # fix the argument order of the cross term so mmd(x, y) == mmd(y, x)
    # bit for bit (float summation order would otherwise differ)
    a, b = ((x, y) if (x.shape, x.tobytes()) <= (y.shape, y.tobytes()) else (y, x))
    value = _mean_kernel(x, x, h) + _mean_kernel(y, y, h) - 2.0 * _mean_kernel(a, b, h)
    return max(value, 0.0)


def c2st(x: np.ndarray, y: np.ndarray, folds: int = 5, seed: int = 0) -> float:
    """Classifier two-sample test accuracy in [0, 1].

    k-nearest-neighbour classification (k = floor(sqrt(train size))) of
    standardized pooled samples under ``folds``-fold cross-validation.
    Ties between the k votes fall back to the single nearest neighbour.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if min(x.shape[0], y.shape[0]) < 1000:
        raise ValueError("c2st needs at least 1000 samples per side")
    if abs(x.shape[0] - y.shape[0]) > 0.01 * max(x.shape[0], y.shape[0]):
        raise ValueError("sample sizes differ by more than 1%")
    m = min(x.shape[0], y.shape[0])
    pooled = np.concatenate([x[:m], y[:m]], axis=0)
    labels = np.concatenate([np.zeros(m, dtype=int), np.ones(m, dtype=int)])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std[std == 0] = 1.0
    pooled = (pooled - mean) / std

    rng = np.random.default_rng(seed)
    perm = rng.permutation(2 * m)
    correct = 0
    for fold in range(folds):
        test_idx = perm[fold::folds]
        train_mask = np.ones(2 * m, dtype=bool)
        train_mask[test_idx] = False
        train = pooled[train_mask]
        train_labels = labels[train_mask]
        k = max(1, int(math.isqrt(train.shape[0])))
        tree = cKDTree(train)
        _, nn = tree.query(pooled[test_idx], k=k)
        nn = np.atleast_2d(nn)
        votes = train_labels[nn].sum(axis=1)
        pred = np.where(2 * votes == k, train_labels[nn[:, 0]], (2 * votes > k).astype(int))
        correct += int((pred == labels[test_idx]).sum())
    return correct / (2 * m)
