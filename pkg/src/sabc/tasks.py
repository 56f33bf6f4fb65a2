"""Benchmark simulators behind a pluggable Task interface.

A Task bundles everything the samplers need: a prior (sampler + log density),
a forward simulator, a summary map, per-statistic distances to the observed
summaries, and, where the likelihood happens to be tractable, an exact
log-likelihood used only by the reference-posterior oracles.

Simulators consume an explicitly passed numpy Generator, so tasks themselves
are stateless and safe to use from any number of workers.  ``simulate_batch``
is the vectorisation hook: the default loops over ``simulate``, while tasks
with an expensive deterministic core (the epidemic ODE) override it.
"""

from __future__ import annotations

import math

import numpy as np

from .integrate import rk45_batch

__all__ = [
    "SimulationError",
    "Task",
    "hyperboloid_task",
    "gmm_task",
    "distractor_task",
    "two_moons_task",
    "sir_task",
    "TASKS",
    "get_task",
]

_LOG_2PI = math.log(2.0 * math.pi)


class SimulationError(RuntimeError):
    """Forward simulation failed for a particular parameter value."""

    def __init__(self, message: str, theta=None):
        super().__init__(message)
        self.theta = None if theta is None else np.asarray(theta, dtype=float)


class Task:
    """Base class wiring priors, simulator, summaries and distances together.

    Subclasses set ``name``, ``dim_theta``, ``dim_stats`` and implement
    ``prior_sample``, ``prior_logdensity`` and ``simulate``.  ``observed``
    and (for synthetic data) ``theta_true`` are fixed at construction.
    """

    name = "task"
    dim_theta = 0
    dim_stats = 0

    def __init__(self):
        self.observed = None
        self.theta_true = None

    # -- prior ------------------------------------------------------------
    def prior_sample(self, rng, size=None):
        raise NotImplementedError

    def prior_logdensity(self, theta):
        raise NotImplementedError

    # -- forward model ----------------------------------------------------
    def simulate(self, theta, rng):
        raise NotImplementedError

    def summaries(self, x):
        """Summary statistics of one raw simulator output."""
        return np.asarray(x, dtype=float)

    def distances(self, s):
        """Per-statistic distances to the observed summaries.

        Componentwise absolute difference; works on a single summary vector
        or a (batch, n) matrix.
        """
        return np.abs(np.asarray(s, dtype=float) - self.observed)

    # -- batch hooks --------------------------------------------------------
    def simulate_batch(self, thetas, rngs):
        """Simulate a batch; ``rngs`` supplies one generator per row (repeats
        allowed).  Tasks with a vectorisable core override this."""
        return [self.simulate(t, g) for t, g in zip(thetas, rngs)]

    def summaries_batch(self, xs):
        return np.asarray([self.summaries(x) for x in xs], dtype=float)

    def stats_batch(self, thetas, rngs):
        """simulate + summarise a batch, returning a (batch, n) matrix."""
        return self.summaries_batch(self.simulate_batch(thetas, rngs))

    # -- tractable likelihood (oracle use only) ----------------------------
    @property
    def has_likelihood(self) -> bool:
        return type(self).log_likelihood is not Task.log_likelihood

    def log_likelihood(self, theta):
        raise NotImplementedError(f"{self.name} has no tractable likelihood")

    def log_likelihood_batch(self, thetas):
        return np.array([self.log_likelihood(t) for t in thetas], dtype=float)


def _box_logpdf(theta, lo, hi):
    theta = np.asarray(theta, dtype=float)
    log_vol = float(np.log(hi - lo).sum())
    inside = np.all((theta >= lo) & (theta <= hi), axis=-1)
    return np.where(inside, -log_vol, -np.inf)


def _box_sample(rng, lo, hi, size):
    d = lo.size
    if size is None:
        return rng.uniform(lo, hi)
    return rng.uniform(lo, hi, size=(size, d))


class HyperboloidTask(Task):
    """Mixture of two tri-variate Student-t's whose locations are absolute
    differences of distances to two pairs of foci; the parameter is a point
    in the plane."""

    name = "hyperboloid"
    dim_theta = 2
    dim_stats = 3

    _nu = 3.0
    _sigma = 0.1
    _a = (np.array([-0.5, 0.0]), np.array([0.5, 0.0]))
    _b = (np.array([0.0, -0.5]), np.array([0.0, 0.5]))
    _lo = np.array([-2.0, -2.0])
    _hi = np.array([2.0, 2.0])

    def __init__(self, theta_true=(0.7, -0.6), obs_seed=42, observed=None):
        super().__init__()
        self.theta_true = np.asarray(theta_true, dtype=float)
        if observed is not None:
            self.observed = np.asarray(observed, dtype=float)
        else:
            x = self.simulate(self.theta_true, np.random.default_rng(obs_seed))
            self.observed = self.summaries(x)

    @staticmethod
    def focus_distance(theta, x1, x2):
        """abs(||theta - x1|| - ||theta - x2||), the mixture location parameter."""
        theta = np.asarray(theta, dtype=float)
        d1 = np.linalg.norm(theta - x1, axis=-1)
        d2 = np.linalg.norm(theta - x2, axis=-1)
        return np.abs(d1 - d2)

    def prior_sample(self, rng, size=None):
        return _box_sample(rng, self._lo, self._hi, size)

    def prior_logdensity(self, theta):
        return _box_logpdf(theta, self._lo, self._hi)

    def simulate(self, theta, rng):
        loc = self.focus_distance(theta, *(self._a if rng.random() < 0.5 else self._b))
        # Student-t as a Gaussian scale mixture: exact for any dimension
        z = rng.standard_normal(3)
        w = rng.chisquare(self._nu)
        return loc + self._sigma * z * np.sqrt(self._nu / w)

    def _t_logpdf(self, s, loc):
        # spherical multivariate-t, dim 3
        nu, sig, p = self._nu, self._sigma, 3
        d2 = np.sum((s - loc) ** 2) / sig**2
        return (
            math.lgamma((nu + p) / 2)
            - math.lgamma(nu / 2)
            - 0.5 * p * math.log(nu * math.pi)
            - p * math.log(sig)
            - 0.5 * (nu + p) * math.log1p(d2 / nu)
        )

    def log_likelihood(self, theta):
        s = self.observed
        la = self._t_logpdf(s, self.focus_distance(theta, *self._a))
        lb = self._t_logpdf(s, self.focus_distance(theta, *self._b))
        m = max(la, lb)
        return m + math.log(0.5 * math.exp(la - m) + 0.5 * math.exp(lb - m))


class GMMTask(Task):
    """Equal mixture of a broad and a narrow Gaussian, both centred at the
    two-dimensional parameter."""

    name = "gmm"
    dim_theta = 2
    dim_stats = 2

    _sigma2 = 0.01
    _lo = np.array([-10.0, -10.0])
    _hi = np.array([10.0, 10.0])

    def __init__(self, theta_true=(-1.5, 2.0), obs_seed=42, observed=None):
        super().__init__()
        self.theta_true = np.asarray(theta_true, dtype=float)
        if observed is not None:
            self.observed = np.asarray(observed, dtype=float)
        else:
            x = self.simulate(self.theta_true, np.random.default_rng(obs_seed))
            self.observed = self.summaries(x)

    def prior_sample(self, rng, size=None):
        return _box_sample(rng, self._lo, self._hi, size)

    def prior_logdensity(self, theta):
        return _box_logpdf(theta, self._lo, self._hi)

    def simulate(self, theta, rng):
        scale = 1.0 if rng.random() < 0.5 else math.sqrt(self._sigma2)
        return np.asarray(theta, dtype=float) + scale * rng.standard_normal(2)

    def log_likelihood(self, theta):
        theta = np.asarray(theta, dtype=float)
        d2 = float(np.sum((self.observed - theta) ** 2))
        la = -0.5 * d2 - _LOG_2PI  # var 1
        lb = -0.5 * d2 / self._sigma2 - _LOG_2PI - math.log(self._sigma2)
        m = max(la, lb)
        return m + math.log(0.5 * math.exp(la - m) + 0.5 * math.exp(lb - m))

    def log_likelihood_batch(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        d2 = np.sum((self.observed - thetas) ** 2, axis=-1)
        la = -0.5 * d2 - _LOG_2PI
        lb = -0.5 * d2 / self._sigma2 - _LOG_2PI - math.log(self._sigma2)
        m = np.maximum(la, lb)
        return m + np.log(0.5 * np.exp(la - m) + 0.5 * np.exp(lb - m))


class DistractorTask(Task):
    """Scalar-parameter Gaussian mixture observed twice, padded with nine
    standard-normal statistics that carry no information at all."""

    name = "distractors"
    dim_theta = 1
    dim_stats = 11

    _alpha = 0.3
    _sigma = 0.3
    _lo = np.array([-10.0])
    _hi = np.array([10.0])

    def __init__(self, obs_seed=42):
        super().__init__()
        self.theta_true = None  # observed summaries are pinned, not simulated
        rng = np.random.default_rng(obs_seed)
        self.observed = np.concatenate([[5.0, 5.0], rng.standard_normal(9)])

    def prior_sample(self, rng, size=None):
        return _box_sample(rng, self._lo, self._hi, size)

    def prior_logdensity(self, theta):
        return _box_logpdf(theta, self._lo, self._hi)

    def simulate(self, theta, rng):
        th = float(np.asarray(theta, dtype=float).reshape(()))
        out = np.empty(11)
        for i in range(2):
            if rng.random() < self._alpha:
                out[i] = th + rng.standard_normal()
            else:
                out[i] = -th + self._sigma * rng.standard_normal()
        out[2:] = rng.standard_normal(9)
        return out

    def _mix_logpdf(self, s, th):
        la = math.log(self._alpha) - 0.5 * (s - th) ** 2 - 0.5 * _LOG_2PI
        lb = (
            math.log(1 - self._alpha)
            - 0.5 * ((s + th) / self._sigma) ** 2
            - 0.5 * _LOG_2PI
            - math.log(self._sigma)
        )
        m = max(la, lb)
        return m + math.log(math.exp(la - m) + math.exp(lb - m))

    def log_likelihood(self, theta):
        th = float(np.asarray(theta, dtype=float).reshape(()))
        ll = sum(self._mix_logpdf(self.observed[i], th) for i in range(2))
        # distractor factors are theta-independent but kept for exactness
        ll += float(np.sum(-0.5 * self.observed[2:] ** 2 - 0.5 * _LOG_2PI))
        return ll


class TwoMoonsTask(Task):
    """Crescent-shaped pushforward of angle/radius noise, offset along the
    diagonal by the (folded) sum of the two parameters."""

    name = "two_moons"
    dim_theta = 2
    dim_stats = 2

    _lo = np.array([-10.0, -10.0])
    _hi = np.array([10.0, 10.0])

    def __init__(self, theta_true=(0.4, -0.7), obs_seed=42, observed=None):
        super().__init__()
        self.theta_true = np.asarray(theta_true, dtype=float)
        if observed is not None:
            self.observed = np.asarray(observed, dtype=float)
        else:
            x = self.simulate(self.theta_true, np.random.default_rng(obs_seed))
            self.observed = self.summaries(x)

    def prior_sample(self, rng, size=None):
        return _box_sample(rng, self._lo, self._hi, size)

    def prior_logdensity(self, theta):
        return _box_logpdf(theta, self._lo, self._hi)

    def simulate(self, theta, rng):
        t1, t2 = float(theta[0]), float(theta[1])
        a = rng.uniform(-0.5 * math.pi, 0.5 * math.pi)
        r = rng.normal(0.1, 0.01)
        return np.array(
            [
                r * math.cos(a) + 0.25 - abs(t1 + t2) / math.sqrt(2.0),
                r * math.sin(a) - (t1 + t2) / math.sqrt(2.0),
            ]
        )


class SIRTask(Task):
    """Deterministic epidemic ODE observed through a binomial sampling
    channel, summarised by six hand-crafted statistics of the count series.

    The statistics are the series mean and standard deviation, the
    (fractional) time of the peak, the peak height relative to the draw size,
    the log-slope of the rising phase, and the fraction of time spent above
    half the peak.  The rising-phase slope carries most of the contact-rate
    information (without it the identified posterior is three times wider
    than the full-data posterior in that coordinate).
    """

    name = "sir"
    dim_theta = 2
    dim_stats = 6

    _n_pop = 1e6
    _s0 = np.array([999999.0, 1.0, 0.0])
    _trials = 1000
    _t_end = 160.0
    _t_eval = np.linspace(0.0, 160.0, 100)
    _mu = (math.log(0.4), math.log(1.0 / 8.0))
    _sd = (0.5, 0.25)

    def __init__(self, theta_true=(0.4, 0.125), obs_seed=42, observed=None):
        super().__init__()
        self.theta_true = np.asarray(theta_true, dtype=float)
        self.observed_counts = None
        if observed is not None:
            self.observed = np.asarray(observed, dtype=float)
        else:
            self.observed_counts = self.simulate(
                self.theta_true, np.random.default_rng(obs_seed)
            )
            self.observed = self.summaries(self.observed_counts)

    def prior_sample(self, rng, size=None):
        n = 1 if size is None else size
        th = np.column_stack(
            [
                rng.lognormal(self._mu[0], self._sd[0], n),
                rng.lognormal(self._mu[1], self._sd[1], n),
            ]
        )
        return th[0] if size is None else th

    def prior_logdensity(self, theta):
        theta = np.asarray(theta, dtype=float)
        t = np.atleast_2d(theta)
        ok = (t > 0).all(axis=1)
        safe = np.where(t > 0, t, 1.0)
        lp = np.zeros(t.shape[0])
        for j in range(2):
            z = (np.log(safe[:, j]) - self._mu[j]) / self._sd[j]
            lp += -0.5 * z**2 - np.log(safe[:, j] * self._sd[j]) - 0.5 * _LOG_2PI
        lp = np.where(ok, lp, -np.inf)
        return lp[0] if theta.ndim == 1 else lp

    def _infected_paths(self, thetas):
        """Integrate the ODE for a (batch, 2) parameter array; returns the
        infected-count fraction at the 100 output times."""
        thetas = np.asarray(thetas, dtype=float)
        beta = thetas[:, 0:1]
        gamma = thetas[:, 1:2]

        def rhs(t, y):
            s, i = y[:, 0:1], y[:, 1:2]
            new_inf = beta * s * i / self._n_pop
            rec = gamma * i
            return np.concatenate([-new_inf, new_inf - rec, rec], axis=1)

        y0 = np.tile(self._s0, (thetas.shape[0], 1))
        try:
            paths = rk45_batch(rhs, (0.0, self._t_end), y0, self._t_eval, rtol=1e-6, atol=1e-8)
        except Exception as exc:
            raise SimulationError(f"SIR integration failed: {exc}", theta=thetas) from exc
        return np.clip(paths[:, :, 1] / self._n_pop, 0.0, 1.0)

    def simulate(self, theta, rng):
        p = self._infected_paths(np.atleast_2d(theta))[0]
        return rng.binomial(self._trials, p).astype(float)

    def simulate_batch(self, thetas, rngs):
        p = self._infected_paths(thetas)
        return [g.binomial(self._trials, p[i]).astype(float) for i, g in enumerate(rngs)]

    def summaries(self, x):
        y = np.asarray(x, dtype=float)
        peak = y.max()
        half = np.mean(y >= 0.5 * peak) if peak > 0 else 1.0
        return np.array(
            [
                y.mean(),
                y.std(),
                self._t_eval[int(np.argmax(y))] / self._t_end,
                peak / self._trials,
                self._rise_slope(y),
                half,
            ]
        )

    def _rise_slope(self, y):
        """Least-squares slope of log1p(counts) over the rising phase."""
        k = int(np.argmax(y))
        if k < 3:
            return 0.0
        t = self._t_eval[: k + 1]
        z = np.log1p(y[: k + 1])
        t = t - t.mean()
        denom = float((t * t).sum())
        return float((t * (z - z.mean())).sum() / denom) if denom > 0 else 0.0

    def summaries_batch(self, xs):
        return np.asarray([self.summaries(x) for x in xs], dtype=float)

    def log_likelihood(self, theta):
        return float(self.log_likelihood_batch(np.atleast_2d(theta))[0])

    def log_likelihood_batch(self, thetas):
        """Product of binomial pmfs of the observed count series given the
        ODE solution.  Requires the raw counts, so the task must have been
        constructed with synthetic observations."""
        if self.observed_counts is None:
            raise NotImplementedError(
                "sir likelihood needs the raw observed count series"
            )
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        ok = (thetas > 0).all(axis=1)
        out = np.full(thetas.shape[0], -np.inf)
        if ok.any():
            p = self._infected_paths(thetas[ok])
            y = self.observed_counts[None, :]
            p = np.clip(p, 1e-12, 1 - 1e-12)
            ll = y * np.log(p) + (self._trials - y) * np.log1p(-p)
            out[ok] = ll.sum(axis=1) + self._log_binom_const
        return out

    @property
    def _log_binom_const(self):
        if not hasattr(self, "_binom_const_cache"):
            y = self.observed_counts
            n = self._trials
            self._binom_const_cache = float(
                sum(
                    math.lgamma(n + 1) - math.lgamma(v + 1) - math.lgamma(n - v + 1)
                    for v in y
                )
            )
        return self._binom_const_cache


def hyperboloid_task(**kwargs) -> Task:
    return HyperboloidTask(**kwargs)


def gmm_task(**kwargs) -> Task:
    return GMMTask(**kwargs)


def distractor_task(**kwargs) -> Task:
    return DistractorTask(**kwargs)


def two_moons_task(**kwargs) -> Task:
    return TwoMoonsTask(**kwargs)


def sir_task(**kwargs) -> Task:
    return SIRTask(**kwargs)


TASKS = {
    "hyperboloid": hyperboloid_task,
    "gmm": gmm_task,
    "distractors": distractor_task,
    "two_moons": two_moons_task,
    "sir": sir_task,
}


def get_task(name: str, **kwargs) -> Task:
    """Look up a benchmark task by registry name."""
    try:
        factory = TASKS[name]
    except KeyError:
        raise KeyError(f"unknown task {name!r}; known: {sorted(TASKS)}") from None
    return factory(**kwargs)
