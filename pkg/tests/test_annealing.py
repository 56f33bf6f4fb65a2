import math

import numpy as np
import pytest

from sabc import (
    Schedule,
    TemperatureOverflowError,
    beta_of_u,
    catalan_coeff,
    geodesic_u,
    metric,
    onsager_matrix,
    onsager_mc_estimate,
    u_of_beta,
    update_beta_e_multi,
    update_beta_e_single,
)


class TestCatalan:
    def test_known_values(self):
        assert catalan_coeff(0) == 1
        assert catalan_coeff(1) == 2
        assert catalan_coeff(2) == 5
        assert catalan_coeff(3) == 14  # 8!/(4! 5!)

    def test_range_guard(self):
        with pytest.raises(ValueError):
            catalan_coeff(-1)
        with pytest.raises(ValueError):
            catalan_coeff(31)


class TestUBetaRelation:
    def test_boundary_half(self):
        assert u_of_beta(0.0) == 0.5

    def test_monte_carlo_mean_at_beta_one(self):
        # rejection sampling from the density prop. to exp(-u) on [0,1], independent
        # of the closed form; agreement to three significant digits
        rng = np.random.default_rng(20240817)
        u = rng.random(2_000_000)
        kept = u[rng.random(2_000_000) < np.exp(-u)]
        assert abs(u_of_beta(1.0) - kept.mean()) < 5e-4

    def test_strictly_decreasing_and_asymptotic(self):
        betas = np.concatenate([np.linspace(0, 5, 200), np.logspace(1, 3, 50)])
        vals = u_of_beta(betas)
        assert (np.diff(vals) < 0).all()
        assert u_of_beta(1000.0) * 1000.0 == pytest.approx(1.0, rel=1e-3)

    def test_series_matches_high_precision_at_crossover(self):
        # 50-digit evaluation of (1 - e^-b (1+b)) / (b (1 - e^-b)); float64
        # arithmetic cancels catastrophically here, which is what the series
        # branch is for
        from decimal import Decimal, getcontext

        getcontext().prec = 50
        for b in (1e-5, 0.99e-4, 1.01e-4, 1e-3):
            db = Decimal(b)
            e = (-db).exp()
            exact = float((1 - e * (1 + db)) / (db * (1 - e)))
            assert u_of_beta(b) == pytest.approx(exact, rel=1e-10)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            u_of_beta(-1.0)
        with pytest.raises(ValueError):
            u_of_beta(float("inf"))


class TestBetaOfU:
    def test_half_maps_to_zero_exactly(self):
        assert beta_of_u(0.5) == 0.0

    def test_round_trip(self):
        for b in (0.1, 1.0, 10.0, 100.0):
            assert abs(beta_of_u(u_of_beta(b)) - b) <= 1e-6 * (1 + b)

    def test_small_u_asymptote(self):
        b = beta_of_u(0.01)
        assert b == pytest.approx(100.0, rel=0.02)
        assert abs(u_of_beta(b) - 0.01) <= 1e-10

    def test_guards(self):
        with pytest.raises(ValueError, match="above the prior mean"):
            beta_of_u(0.51)
        with pytest.raises(TemperatureOverflowError) as err:
            beta_of_u(np.array([0.3, 1e-13]))
        assert err.value.stat_index == 1

    def test_vectorised(self):
        us = np.array([0.5, 0.3, 0.01, 1e-6])
        out = beta_of_u(us)
        assert out[0] == 0.0
        assert np.allclose(u_of_beta(out[1:]), us[1:], atol=1e-10)


class TestScheduleUpdates:
    def test_multi_worked_example(self):
        # n = 2, v = 1, U = (1/2, 1/2): force 3/(5*3*(1/2)^2) = 0.8 on top of
        # beta(1/2) = 0
        s = Schedule("multi", v=1.0, n_stats=2)
        out = update_beta_e_multi(s, np.array([0.5, 0.5]))
        assert np.allclose(out, 0.8, atol=1e-12)

    def test_single_worked_example(self):
        s = Schedule("single", v=1.0, n_stats=2)
        assert update_beta_e_single(s, 0.5) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_zero_velocity_reduces_to_beta(self):
        s = Schedule("multi", v=0.0, n_stats=3)
        U = np.array([0.4, 0.2, 0.1])
        assert np.allclose(update_beta_e_multi(s, U), beta_of_u(U))
        s1 = Schedule("single", v=0.0, n_stats=3)
        assert update_beta_e_single(s1, 0.3) == pytest.approx(beta_of_u(0.3))

    def test_permutation_equivariance(self):
        s = Schedule("multi", v=1.0, n_stats=4)
        U = np.array([0.4, 0.11, 0.3, 0.05])
        perm = np.array([2, 0, 3, 1])
        assert np.allclose(update_beta_e_multi(s, U)[perm], update_beta_e_multi(s, U[perm]))

    def test_diagonal_reduction(self):
        # equal energies reduce the multi force to v / (c_n U^(1+n/2))
        for n in (1, 2, 3):
            s = Schedule("multi", v=1.0, n_stats=n)
            for u in (0.5, 0.1, 0.01):
                got = update_beta_e_multi(s, np.full(n, u))
                want = beta_of_u(u) + 1.0 / (catalan_coeff(n) * u ** (1 + n / 2))
                assert np.allclose(got, want, rtol=1e-12)

    def test_force_never_cools(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 5, 11):
            s = Schedule("multi", v=1.0, n_stats=n)
            for _ in range(20):
                U = rng.uniform(0.01, 0.5, n)
                assert (update_beta_e_multi(s, U) > beta_of_u(U)).all()

    def test_single_force_power_law(self):
        s = Schedule("single", v=1.0, n_stats=1)
        f1 = update_beta_e_single(s, 0.2) - beta_of_u(0.2)
        f2 = update_beta_e_single(s, 0.1) - beta_of_u(0.1)
        assert f2 / f1 == pytest.approx(2.0**1.5, rel=1e-12)

    def test_overflow_carries_index(self):
        s = Schedule("multi", v=1.0, n_stats=2)
        with pytest.raises(TemperatureOverflowError) as err:
            update_beta_e_multi(s, np.array([0.3, 1e-13]))
        assert err.value.stat_index == 1

    def test_huge_energy_spread_stays_finite(self):
        s = Schedule("multi", v=1.0, n_stats=11)
        U = np.array([1e-9, 1e-9] + [0.4] * 9)
        out = update_beta_e_multi(s, U)
        assert np.isfinite(out).all()
        assert (out > 0).all()


class TestGeometry:
    def test_onsager_plugin_n1(self):
        assert onsager_matrix(np.array([1.0]), catalan_coeff(1))[0, 0] == pytest.approx(-2.0)

    def test_metric_plugin_n1(self):
        assert metric(np.array([1.0]), catalan_coeff(1))[0, 0] == pytest.approx(0.5)

    def test_signs(self):
        U = np.array([0.3, 0.2, 0.4])
        L = onsager_matrix(U, catalan_coeff(3))
        off = ~np.eye(3, dtype=bool)
        assert (np.diag(L) < 0).all()
        assert (L[off] > 0).all()

    def test_negative_inverse_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            U = rng.uniform(0.05, 0.5, n)
            c_n = catalan_coeff(n)
            L = onsager_matrix(U, c_n)
            g = metric(U, c_n)
            err = np.abs(-L @ g - np.eye(n)).max()
            assert err < 1e-10
            assert np.allclose(-np.linalg.inv(L), g, rtol=1e-10)

    def test_metric_positive_definite(self):
        rng = np.random.default_rng(8)
        for n in (1, 3, 6):
            U = rng.uniform(0.05, 0.5, n)
            eig = np.linalg.eigvalsh(metric(U, catalan_coeff(n)))
            assert (eig > 0).all()


class TestGeodesic:
    def test_initial_condition(self):
        U0 = np.array([0.5, 0.3])
        assert np.array_equal(geodesic_u(0.0, U0, v=1.0, n=2), U0)

    def test_derivative_matches_flux_form(self):
        # central finite differences against -v U0^(-n/2) U^(1+n/2) at U0 = 1
        for n in (1, 2, 3):
            U0 = np.ones(n)
            h = 1e-5
            num = (geodesic_u(1.0 + h, U0, 1.0, n) - geodesic_u(1.0 - h, U0, 1.0, n)) / (2 * h)
            U1 = geodesic_u(1.0, U0, 1.0, n)
            want = -1.0 * U0 ** (-n / 2) * U1 ** (1 + n / 2)
            assert np.allclose(num, want, rtol=1e-6)

    def test_matches_christoffel_ode(self):
        # fourth-order integration of the geodesic equation in log-energy
        # coordinates, with Christoffel symbols
        # Gamma^i_jk = (-(d^i_j) - (d^i_k) + (d_jk + 1)/(n+1)) / 2
        for n in (1, 2, 3):
            v = 1.0
            eye = np.eye(n)
            eta = (eye + 1.0) / (n + 1)
            gamma = 0.5 * (
                -eye[:, :, None] - eye[:, None, :] + eta[None, :, :]
            )  # Gamma[i, j, k]

            def rhs(state):
                p, pdot = state[:n], state[n:]
                acc = -np.einsum("ijk,j,k->i", gamma, pdot, pdot)
                return np.concatenate([pdot, acc])

            state = np.concatenate([np.zeros(n), -v * np.ones(n)])  # U0 = 1
            t, h = 0.0, 0.002
            worst = 0.0
            while t < 10.0 - 1e-12:
                k1 = rhs(state)
                k2 = rhs(state + 0.5 * h * k1)
                k3 = rhs(state + 0.5 * h * k2)
                k4 = rhs(state + h * k3)
                state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t += h
                closed = geodesic_u(t, np.ones(n), v, n)
                worst = max(worst, np.abs(np.exp(state[:n]) - closed).max())
            assert worst < 1e-6


class TestOnsagerMonteCarlo:
    def test_closed_form_within_three_stderr(self):
        # quick version of the full verification (the acceptance suite runs
        # the 1e6-sample one through the CLI)
        for n, q_target, m_target in ((1, 2.0, None), (2, 10.0, -5.0), (3, 42.0, -14.0)):
            rng = np.random.default_rng((99, n))
            est, se = onsager_mc_estimate(n, 200_000, rng)
            assert abs(est[0, 0] - q_target) <= 3 * se[0, 0]
            if m_target is not None:
                assert abs(est[0, 1] - m_target) <= 3 * se[0, 1]

    def test_symmetry_of_estimates(self):
        rng = np.random.default_rng(5)
        est, _ = onsager_mc_estimate(3, 50_000, rng)
        assert np.allclose(est, est.T)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule("both", v=1.0, n_stats=2)
    with pytest.raises(ValueError):
        Schedule("multi", v=-1.0, n_stats=2)
    with pytest.raises(ValueError):
        Schedule("multi", v=1.0, n_stats=0)
    assert Schedule("multi", v=1.0, n_stats=2).c_n == 5.0
