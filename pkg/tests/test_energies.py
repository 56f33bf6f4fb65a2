import numpy as np
import pytest
from scipy.stats import kstest

from sabc import build_transform, to_energy, to_energy_vector


def test_columns_are_sorted():
    t = build_transform(np.array([[3.0], [1.0], [4.0], [2.0]]))
    assert t.tables.tolist() == [[1.0, 2.0, 3.0, 4.0]]


def test_identical_columns_give_identical_tables():
    col = np.array([0.3, 1.2, 0.7, 2.0])
    t = build_transform(np.column_stack([col, col]))
    assert np.array_equal(t.tables[0], t.tables[1])


def test_rejects_tiny_and_nonfinite_input():
    with pytest.raises(ValueError):
        build_transform(np.array([[1.0]]))
    with pytest.raises(ValueError, match="statistic 1"):
        build_transform(np.array([[1.0, np.nan], [2.0, 3.0]]))
    with pytest.raises(ValueError, match="negative"):
        build_transform(np.array([[1.0, -2.0], [2.0, 3.0]]))


def test_linear_ramp_values():
    t = build_transform(np.array([[1.0], [2.0], [3.0], [4.0]]))
    assert to_energy(t, 0, 2.5) == pytest.approx(0.5)
    assert to_energy(t, 0, 0.5) == 0.0
    assert to_energy(t, 0, 10.0) == 1.0
    assert to_energy(t, 0, 4.0) == 1.0  # attained at the table maximum


def test_duplicate_run_uses_first_and_last_rank():
    t = build_transform(np.array([[1.0], [2.0], [2.0], [3.0]]))
    grid = 1.0 / 3.0
    # limit from below is the first index of the run, the point itself the last
    assert to_energy(t, 0, 2.0 - 1e-9) == pytest.approx(grid, abs=1e-6)
    assert to_energy(t, 0, 2.0) == pytest.approx(2 * grid)


def test_nan_rejected():
    t = build_transform(np.array([[1.0], [2.0]]))
    with pytest.raises(ValueError):
        to_energy(t, 0, float("nan"))
    with pytest.raises(ValueError):
        to_energy_vector(t, np.array([np.nan]))


def test_vector_matches_scalar_loop():
    rng = np.random.default_rng(5)
    t = build_transform(rng.exponential(1.0, size=(50, 3)))
    rhos = rng.exponential(1.0, size=3)
    vec = to_energy_vector(t, rhos)
    scalars = [to_energy(t, i, rhos[i]) for i in range(3)]
    assert np.allclose(vec, scalars, atol=0)
    with pytest.raises(ValueError):
        to_energy_vector(t, rng.exponential(1.0, size=4))


def test_all_below_minimum_gives_zero_vector():
    t = build_transform(np.ones((10, 2)) + np.arange(10)[:, None])
    assert to_energy_vector(t, np.array([0.0, 0.5])).tolist() == [0.0, 0.0]


def test_monotone_in_rho():
    rng = np.random.default_rng(11)
    for trial in range(20):
        # mix continuous values and deliberate ties
        col = np.round(rng.exponential(1.0, size=40), 1)
        t = build_transform(col[:, None])
        xs = np.sort(rng.uniform(-0.5, col.max() + 0.5, size=200))
        us = t.energies(xs[:, None])[:, 0]
        assert (np.diff(us) >= 0).all()
        assert us.min() >= 0.0 and us.max() <= 1.0


def test_strictly_increasing_between_distinct_values():
    # between distinct consecutive table entries the ramp has positive slope
    t = build_transform(np.array([[1.0], [2.0], [2.0], [5.0]]))
    for a, b in ((1.0, 2.0), (2.0, 5.0)):
        lo = to_energy(t, 0, a + 1e-9)
        mid = to_energy(t, 0, 0.5 * (a + b))
        hi = to_energy(t, 0, b - 1e-9)
        assert lo < mid < hi


def test_batch_matrix_matches_rows():
    rng = np.random.default_rng(3)
    t = build_transform(rng.random((30, 2)))
    batch = rng.random((17, 2))
    out = t.energies(batch)
    for k in range(17):
        assert np.array_equal(out[k], to_energy_vector(t, batch[k]))


def test_uniformisation_fresh_sample():
    # fresh draws from the table's own distribution must look uniform; the
    # 1% critical value uses the effective size of the two-sample problem
    # (the table itself is noise too)
    rng = np.random.default_rng(1)
    n = m = 10_000
    t = build_transform(rng.random((n, 1)))
    u = t.energies(rng.random((m, 1)))[:, 0]
    crit = 1.628 / np.sqrt(n * m / (n + m))
    assert kstest(u, "uniform").statistic < crit


def test_mean_energy_of_build_sample_is_half():
    rng = np.random.default_rng(2)
    rho = rng.exponential(1.0, size=(1000, 2))
    t = build_transform(rho)
    u = t.energies(rho)
    # ranks 0..N-1 scaled by N-1 average to exactly one half
    assert np.allclose(u.mean(axis=0), 0.5, atol=1e-9)


def test_round_trip_serialisation():
    rng = np.random.default_rng(4)
    t = build_transform(rng.random((20, 3)))
    t2 = type(t).from_dict(t.to_dict())
    assert np.array_equal(t.tables, t2.tables)
