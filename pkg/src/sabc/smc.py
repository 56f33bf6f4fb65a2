"""Sequential Monte Carlo ABC baseline.

Population Monte Carlo over a multiplicatively decaying tolerance on the
aggregate Euclidean distance sqrt(sum_i rho_i^2).  Each round draws
candidates from the weighted population, perturbs them with a Gaussian
kernel of twice the weighted covariance, and keeps simulations inside the
current tolerance until the population is refilled; importance weights are
prior / kernel-mixture, and the population is systematically resampled
whenever the relative effective sample size drops below the threshold.

The run record matches the annealed sampler's shape so the comparison
harness can treat the two identically: the "U" trajectory columns hold the
per-statistic mean raw distances and every "beta_e" column holds the current
tolerance.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .records import RunConfig, RunRecord
from .sampler import _derive_rng, systematic_resample
from .tasks import SimulationError, Task

__all__ = ["run_smcabc"]

_TAG_SMC = 10


def _weighted_cov(thetas: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mean = weights @ thetas
    centred = thetas - mean
    cov = (centred * weights[:, None]).T @ centred
    return cov


def _kernel_mixture_logpdf(candidates, sources, weights, cov):
    """log sum_j w_j N(candidate; source_j, cov), vectorised over candidates."""
    d = sources.shape[1]
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    diff = candidates[:, None, :] - sources[None, :, :]  # (B, N, d)
    quad = np.einsum("bnd,de,bne->bn", diff, inv, diff)
    logk = -0.5 * (quad + logdet + d * math.log(2.0 * math.pi))
    m = logk.max(axis=1, keepdims=True)
    return (m[:, 0] + np.log(np.exp(logk - m) @ weights))


def _simulate_distances(task: Task, thetas: np.ndarray, rng):
    """Batch-simulate and return (per-stat distance matrix, ok mask)."""
    n = thetas.shape[0]
    ok = np.ones(n, dtype=bool)
    try:
        xs = task.simulate_batch(thetas, [rng] * n)
    except SimulationError:
        xs = []
        for i in range(n):
            try:
                xs.append(task.simulate(thetas[i], rng))
            except SimulationError:
                xs.append(None)
                ok[i] = False
    rho = np.zeros((n, task.dim_stats))
    good = [i for i in range(n) if ok[i] and xs[i] is not None]
    ok[[i for i in range(n) if xs[i] is None]] = False
    if good:
        stats = task.summaries_batch([xs[i] for i in good])
        rho[good] = task.distances(stats)
    ok &= np.isfinite(rho).all(axis=1)
    return rho, ok


def run_smcabc(task: Task, cfg: RunConfig, progress=None) -> RunRecord:
    """Run SMC-ABC under a total simulation budget of ``cfg.updates``.

    The tolerance sequence is exactly eps_0 * decay^k with eps_0 the largest
    aggregate distance of the initial prior population (so the first round
    is unconstrained, i.e. the prior itself).  Returns the last complete
    population when the budget runs out mid-round.
    """
    cfg.validate()
    if cfg.algorithm != "smc-abc":
        raise ValueError(f"run_smcabc cannot run algorithm {cfg.algorithm!r}")
    t_start = time.perf_counter()
    rng = _derive_rng(cfg.seed, _TAG_SMC)
    n = cfg.particles
    budget = cfg.updates

    thetas = np.asarray(task.prior_sample(rng, n), dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    rho, ok = _simulate_distances(task, thetas, rng)
    sim_calls = n
    sim_failures = int((~ok).sum())
    for i in np.flatnonzero(~ok):  # failed prior draws are replaced outright
        for _ in range(100):
            thetas[i] = np.atleast_1d(task.prior_sample(rng))
            sim_calls += 1
            try:
                x = task.simulate(thetas[i], rng)
            except SimulationError:
                sim_failures += 1
                continue
            s = task.summaries(x)
            if np.isfinite(s).all():
                rho[i] = task.distances(s)
                break
        else:
            raise SimulationError(f"prior initialisation failed at particle {i}")
    dist = np.linalg.norm(rho, axis=1)
    weights = np.full(n, 1.0 / n)
    eps0 = float(dist.max())

    traj_u = [rho.mean(axis=0)]
    traj_eps = [math.inf]  # the initial population is unconstrained
    traj_acc = [1.0]
    ess_log = [float(n)]
    eps_schedule = []
    rounds = 0

    while sim_calls < budget:
        eps = eps0 * cfg.decay ** (rounds + 1)
        cov = 2.0 * _weighted_cov(thetas, weights)
        cov = cov + 1e-10 * np.eye(cov.shape[0])
        chol = np.linalg.cholesky(cov)
        new_theta = np.empty_like(thetas)
        new_rho = np.empty_like(rho)
        filled = 0
        proposed = 0
        stalled = 0
        exhausted = False
        while filled < n:
            if sim_calls >= budget:
                exhausted = True
                break
            batch = min(max(2 * (n - filled), 256), 4096)
            src = rng.choice(n, size=batch, p=weights)
            cand = thetas[src] + rng.standard_normal((batch, thetas.shape[1])) @ chol.T
            lp = np.atleast_1d(task.prior_logdensity(cand))
            inside = lp > -np.inf
            proposed += batch
            take = np.flatnonzero(inside)
            if take.size == 0:
                stalled += 1
                if stalled > 1000:
                    raise SimulationError("smc stalled: proposals never inside the prior")
                continue
            stalled = 0
            room = budget - sim_calls
            take = take[:room] if room < take.size else take
            r, okk = _simulate_distances(task, cand[take], rng)
            sim_calls += take.size
            sim_failures += int((~okk).sum())
            d_agg = np.linalg.norm(r, axis=1)
            keep = okk & (d_agg <= eps)
            for j in np.flatnonzero(keep):
                if filled == n:
                    break
                new_theta[filled] = cand[take[j]]
                new_rho[filled] = r[j]
                filled += 1
            if sim_calls >= budget and filled < n:
                exhausted = True
                break
        if exhausted:
            break
        rounds += 1
        eps_schedule.append(eps)
        # importance weights: prior over the kernel mixture of the old population
        log_prior = np.atleast_1d(task.prior_logdensity(new_theta))
        log_mix = _kernel_mixture_logpdf(new_theta, thetas, weights, cov)
        logw = log_prior - log_mix
        logw -= logw.max()
        w = np.exp(logw)
        w /= w.sum()
        thetas = new_theta
        rho = new_rho
        weights = w
        ess = float(1.0 / np.sum(weights**2))
        ess_log.append(ess)
        if ess < cfg.ess_threshold * n:
            idx = systematic_resample(weights, rng)
            thetas = thetas[idx].copy()
            rho = rho[idx].copy()
            weights = np.full(n, 1.0 / n)
        traj_u.append(rho.mean(axis=0))
        traj_eps.append(eps)
        traj_acc.append(n / max(proposed, 1))
        if progress is not None:
            progress(rounds, traj_u[-1], eps, traj_acc[-1])

    # final unweighted sample of exactly n rows
    if np.ptp(weights) > 0:
        idx = systematic_resample(weights, rng)
        posterior = thetas[idx].copy()
    else:
        posterior = thetas.copy()

    n_stats = task.dim_stats
    sweeps = len(traj_u)
    beta_cols = np.repeat(np.asarray(traj_eps)[:, None], n_stats, axis=1)
    return RunRecord(
        config=cfg.to_dict(),
        posterior=posterior,
        traj_u=np.asarray(traj_u).reshape(sweeps, n_stats),
        traj_beta_e=beta_cols,
        traj_accept=np.asarray(traj_acc, dtype=float),
        sim_calls=sim_calls,
        sim_failures=sim_failures,
        jump_ess=[float(e) for e in ess_log],
        status="ok",
        wallclock=time.perf_counter() - t_start,
        energy_tables=None,
        extra={"eps0": eps0, "eps_schedule": [float(e) for e in eps_schedule]},
    )
