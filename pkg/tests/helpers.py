"""Toy tasks with analytically known behaviour, for sampler tests."""

import math

import numpy as np

from sabc import Task


class TwoStateTask(Task):
    """Parameter lives on {0, 1}; the simulator echoes it, so energies are
    exactly 0 and 1 and the chain's stationary law is a two-point Gibbs
    distribution."""

    name = "two_state"
    dim_theta = 1
    dim_stats = 1

    def __init__(self):
        super().__init__()
        self.observed = np.zeros(1)

    def prior_sample(self, rng, size=None):
        n = 1 if size is None else size
        th = rng.integers(0, 2, size=(n, 1)).astype(float)
        return th[0] if size is None else th

    def prior_logdensity(self, theta):
        th = np.asarray(theta, dtype=float)
        vals = th[..., 0]
        ok = (vals == 0.0) | (vals == 1.0)
        out = np.where(ok, math.log(0.5), -np.inf)
        return out if np.ndim(out) else float(out)

    def simulate(self, theta, rng):
        return np.asarray(theta, dtype=float)[:1].copy()


class IIDPairTask(Task):
    """Two exchangeable statistics: independent unit-noise observations of a
    scalar parameter, observed at zero."""

    name = "iid_pair"
    dim_theta = 1
    dim_stats = 2

    def __init__(self):
        super().__init__()
        self.observed = np.zeros(2)
        self.theta_true = np.zeros(1)

    def prior_sample(self, rng, size=None):
        n = 1 if size is None else size
        th = rng.uniform(-3.0, 3.0, size=(n, 1))
        return th[0] if size is None else th

    def prior_logdensity(self, theta):
        th = np.asarray(theta, dtype=float)
        vals = th[..., 0]
        ok = (vals >= -3.0) & (vals <= 3.0)
        out = np.where(ok, -math.log(6.0), -np.inf)
        return out if np.ndim(out) else float(out)

    def simulate(self, theta, rng):
        return float(theta[0]) + rng.standard_normal(2)


class AlwaysFailTask(Task):
    """Simulator that always raises, to exercise failure paths."""

    name = "always_fail"
    dim_theta = 1
    dim_stats = 1

    def __init__(self):
        super().__init__()
        self.observed = np.zeros(1)

    def prior_sample(self, rng, size=None):
        n = 1 if size is None else size
        th = rng.uniform(0.0, 1.0, size=(n, 1))
        return th[0] if size is None else th

    def prior_logdensity(self, theta):
        th = np.asarray(theta, dtype=float)
        vals = th[..., 0]
        out = np.where((vals >= 0) & (vals <= 1), 0.0, -np.inf)
        return out if np.ndim(out) else float(out)

    def simulate(self, theta, rng):
        from sabc import SimulationError

        raise SimulationError("broken simulator", theta=theta)
