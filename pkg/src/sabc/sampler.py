"""Annealed particle engine with per-statistic energies and temperatures.

A population of particles is initialised from the prior, its distances to
the observed summaries are rectified into energies, and the particles are
then updated with Metropolis moves whose acceptance couples each statistic's
energy change to that statistic's external inverse temperature.  The
temperatures follow the minimal-entropy-production schedule; periodic
importance-sampling jumps multiply them by (1 + delta) with a compensating
reweight-and-resample of the population.

Two drivers are provided.  The serial driver updates one randomly chosen
particle at a time and refreshes the temperatures after every update.  The
parallel driver sweeps the whole population against a frozen snapshot (so
differential-evolution partners come from the start of the sweep), applies
all writes at a barrier, and only then updates the temperatures once.  Both
are deterministic given (seed, worker count, config): every particle slot
owns an independent, seed-derived random stream, and slot draws always occur
in the canonical order proposal -> simulation -> acceptance uniform.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .annealing import (
    Schedule,
    TemperatureOverflowError,
    TemperatureState,
    U_GUARD,
    beta_of_u,
    update_beta_e_multi,
    update_beta_e_single,
)
from .energies import EnergyTransform, build_transform
from .records import RunConfig, RunRecord
from .tasks import SimulationError, Task

__all__ = [
    "Population",
    "ProposalKernel",
    "initialize",
    "propose",
    "metropolis_step",
    "importance_jump",
    "systematic_resample",
    "run_sabc",
]

# seed-derivation namespaces: (seed, tag, ...) must never collide
_TAG_INIT = 0
_TAG_SLOT = 1
_TAG_DRIVER = 2
_TAG_SWEEP = 3


def _derive_rng(*key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


@dataclass
class ProposalKernel:
    """Symmetric proposal for parameter jumps.

    ``kind`` is "de" (differential evolution: the move is a scaled difference
    of two other particles plus a small jitter) or "gaussian" (random walk
    with a covariance adapted from the current population at each barrier).
    """

    kind: str = "de"
    gamma: float | None = None  # resolved to 2.38 / sqrt(2 d) when None
    jitter: float = 1e-6
    cov: np.ndarray | None = None

    def resolve(self, dim_theta: int) -> "ProposalKernel":
        if self.kind not in ("de", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        gamma = self.gamma
        if gamma is None:
            gamma = 2.38 / math.sqrt(2.0 * dim_theta)
        return ProposalKernel(self.kind, gamma, self.jitter, self.cov)

    def adapt(self, thetas: np.ndarray) -> None:
        """Refresh the random-walk covariance from the population (gaussian
        kind only; differential evolution adapts implicitly)."""
        if self.kind != "gaussian":
            return
        d = thetas.shape[1]
        cov = np.cov(thetas.T).reshape(d, d) * (2.38**2 / d)
        self.cov = cov + self.jitter**2 * np.eye(d)

    def _chol(self) -> np.ndarray:
        if self.cov is None:
            raise ValueError("gaussian kernel used before covariance was set")
        return np.linalg.cholesky(self.cov)


def propose(kernel: ProposalKernel, pool, alpha: int, rng) -> np.ndarray:
    """Propose a new position for particle ``alpha`` given the particle pool.

    ``pool`` is a Population or a bare (N, d) position array (the parallel
    driver hands in the frozen sweep snapshot).  DE kind: theta_alpha +
    gamma (theta_b - theta_c) + jitter noise, with the ordered pair (b, c)
    drawn uniformly without replacement from the other slots.  Gaussian
    kind: theta_alpha + N(0, cov).
    """
    thetas = pool.theta if hasattr(pool, "theta") else np.asarray(pool)
    n, d = thetas.shape
    if kernel.kind == "de":
        if n < 3:
            raise ValueError("differential-evolution proposals need at least 3 particles")
        b = int(rng.integers(n - 1))
        b += b >= alpha
        c = int(rng.integers(n - 2))
        lo, hi = (alpha, b) if alpha < b else (b, alpha)
        c += c >= lo
        c += c >= hi
        step = kernel.gamma * (thetas[b] - thetas[c])
        if kernel.jitter > 0:
            step = step + kernel.jitter * rng.standard_normal(d)
        return thetas[alpha] + step
    return thetas[alpha] + kernel._chol() @ rng.standard_normal(d)


@dataclass
class Population:
    """Particle arrays plus the temperature state and run counters.

    ``rng_streams`` holds one independent generator per particle slot (used
    statefully by in-process drivers; worker processes derive equivalent
    streams from the seed instead).  Slots keep their streams across
    importance jumps; only the particle data is resampled.
    """

    theta: np.ndarray
    u: np.ndarray
    log_prior: np.ndarray
    temps: TemperatureState
    seed: int
    rng_streams: list = field(repr=False, default_factory=list)
    accepted_since_jump: int = 0
    total_accepted: int = 0
    ess: float = float("nan")
    sim_calls: int = 0
    sim_failures: int = 0

    @property
    def size(self) -> int:
        return self.theta.shape[0]

    @property
    def n_stats(self) -> int:
        return self.u.shape[1]


def _state_beta(U: np.ndarray) -> np.ndarray:
    # diagnostic per-statistic internal temperatures; clamped into the
    # invertible range so a fully converged statistic cannot raise here
    return beta_of_u(np.clip(U, 2.0 * U_GUARD, 0.5))


def _simulate_stats(task: Task, thetas: np.ndarray, rngs) -> tuple[np.ndarray, np.ndarray]:
    """Simulate and summarise a batch, isolating per-row failures.

    Returns (stats, ok): failed or non-finite rows have ok = False and an
    undefined stats row.
    """
    n = thetas.shape[0]
    ok = np.ones(n, dtype=bool)
    try:
        xs = task.simulate_batch(thetas, rngs)
    except SimulationError:
        xs = []
        for i in range(n):
            try:
                xs.append(task.simulate(thetas[i], rngs[i]))
            except SimulationError:
                xs.append(None)
                ok[i] = False
    stats = np.zeros((n, task.dim_stats))
    good = [i for i in range(n) if ok[i] and xs[i] is not None]
    ok[[i for i in range(n) if xs[i] is None]] = False
    if good:
        stats[good] = task.summaries_batch([xs[i] for i in good])
    finite = np.isfinite(stats).all(axis=1)
    return stats, ok & finite


def initialize(task: Task, n_particles: int, seed: int) -> tuple[Population, EnergyTransform]:
    """Draw the initial population from the prior and build the energy tables.

    The same prior sample that seeds the particles defines the per-statistic
    rectification tables, so the initial per-statistic mean energies sit at
    one half and all external temperatures start at zero.
    """
    if n_particles < 100:
        raise ValueError("population size must be at least 100")
    rng = _derive_rng(seed, _TAG_INIT)
    thetas = np.asarray(task.prior_sample(rng, n_particles), dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    stats, ok = _simulate_stats(task, thetas, [rng] * n_particles)
    sim_calls = n_particles
    for i in np.flatnonzero(~ok):
        for attempt in range(100):
            thetas[i] = np.atleast_1d(task.prior_sample(rng))
            sim_calls += 1
            try:
                x = task.simulate(thetas[i], rng)
            except SimulationError as exc:
                raise SimulationError(
                    f"initialisation failed at particle {i}: {exc}", theta=thetas[i]
                ) from exc
            s = task.summaries(x)
            if np.isfinite(s).all():
                stats[i] = s
                break
        else:
            raise SimulationError(
                f"particle {i}: no finite summaries after 100 prior redraws",
                theta=thetas[i],
            )
    rho = task.distances(stats)
    transform = build_transform(rho)
    u = transform.energies(rho)
    U = u.mean(axis=0)
    temps = TemperatureState(
        beta_e=np.zeros(task.dim_stats), beta=_state_beta(U), U=U
    )
    streams = [_derive_rng(seed, _TAG_SLOT, i) for i in range(n_particles)]
    pop = Population(
        theta=thetas,
        u=u,
        log_prior=np.asarray(task.prior_logdensity(thetas), dtype=float),
        temps=temps,
        seed=seed,
        rng_streams=streams,
        sim_calls=sim_calls,
    )
    return pop, transform


def metropolis_step(
    pop: Population,
    task: Task,
    transform: EnergyTransform,
    kernel: ProposalKernel,
    alpha: int,
    rng,
) -> bool:
    """One Metropolis update of particle ``alpha`` in place.

    Accepts with probability min(1, exp(-sum_i beta_e_i (u'_i - u_i)) *
    prior(theta') / prior(theta)).  Proposals outside the prior support are
    rejected without simulation; simulator failures count as rejections.
    """
    theta_p = propose(kernel, pop.theta, alpha, rng)
    lp = float(task.prior_logdensity(theta_p))
    if lp == -np.inf:
        return False
    pop.sim_calls += 1
    try:
        x = task.simulate(theta_p, rng)
    except SimulationError:
        pop.sim_failures += 1
        return False
    s = task.summaries(x)
    if not np.isfinite(s).all():
        pop.sim_failures += 1
        return False
    u_p = transform.energies(task.distances(s))
    log_acc = -float(pop.temps.beta_e @ (u_p - pop.u[alpha])) + lp - pop.log_prior[alpha]
    if math.log(rng.random()) >= log_acc:
        return False
    pop.theta[alpha] = theta_p
    pop.u[alpha] = u_p
    pop.log_prior[alpha] = lp
    pop.accepted_since_jump += 1
    pop.total_accepted += 1
    return True


def systematic_resample(weights: np.ndarray, rng) -> np.ndarray:
    """Systematic resampling: N indices from one uniform offset."""
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions).clip(max=n - 1)


def _jump_weights(pop: Population, delta: float) -> np.ndarray:
    """Unnormalised reweighting factors exp(-delta sum_i beta_e_i u_i): the
    factors that map the tempered population to one (1 + delta) colder."""
    logw = -delta * (pop.u @ pop.temps.beta_e)
    return np.exp(logw - logw.max())


def importance_jump(pop: Population, delta: float, rng) -> Population:
    """Cool all external temperatures by (1 + delta) with a compensating
    reweight-and-resample of the population.

    The effective sample size of the weights is recorded on ``pop.ess``
    before resampling.  Degenerate (all-zero) weights skip the jump and
    leave the temperatures untouched.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    w = _jump_weights(pop, delta)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        warnings.warn("importance jump skipped: degenerate weights", RuntimeWarning)
        return pop
    w /= total
    pop.ess = float(1.0 / np.sum(w**2))
    idx = systematic_resample(w, rng)
    pop.theta = pop.theta[idx].copy()
    pop.u = pop.u[idx].copy()
    pop.log_prior = pop.log_prior[idx].copy()
    pop.temps.beta_e = pop.temps.beta_e * (1.0 + delta)
    pop.temps.U = pop.u.mean(axis=0)
    pop.temps.beta = _state_beta(pop.temps.U)
    pop.accepted_since_jump = 0
    return pop


# ---------------------------------------------------------------------------
# sweep execution (parallel driver)

def _sweep_slots(task, transform, kernel, beta_e, snap_theta, snap_u, snap_lp,
                 slots, rngs):
    """Metropolis-update a range of slots against a frozen snapshot.

    Returns per-slot arrays (accept flag, proposed theta/energies/log-prior,
    simulation counters).  Writes are applied by the caller at the barrier.
    """
    m = len(slots)
    d = snap_theta.shape[1]
    theta_p = np.empty((m, d))
    lp = np.empty(m)
    for j, alpha in enumerate(slots):
        theta_p[j] = propose(kernel, snap_theta, alpha, rngs[j])
        lp[j] = task.prior_logdensity(theta_p[j])
    in_support = lp > -np.inf
    idx = np.flatnonzero(in_support)
    accept = np.zeros(m, dtype=bool)
    u_p = np.zeros((m, snap_u.shape[1]))
    failures = 0
    if idx.size:
        stats, ok = _simulate_stats(task, theta_p[idx], [rngs[j] for j in idx])
        failures = int((~ok).sum())
        sim_ok = idx[ok]
        if sim_ok.size:
            u_ok = transform.energies(task.distances(stats[ok]))
            u_p[sim_ok] = u_ok
            du = (u_ok - snap_u[np.asarray(slots)[sim_ok]]) @ beta_e
            log_acc = -du + lp[sim_ok] - snap_lp[np.asarray(slots)[sim_ok]]
            log_unif = np.log([rngs[j].random() for j in sim_ok])
            accept[sim_ok] = log_unif < log_acc
    return {
        "accept": accept,
        "theta": theta_p,
        "u": u_p,
        "lp": lp,
        "sim_calls": int(idx.size),
        "sim_failures": failures,
    }


_POOL_STATE: dict = {}


def _pool_init(task, transform, kernel, seed):
    _POOL_STATE.update(task=task, transform=transform, kernel=kernel, seed=seed)


def _pool_sweep(sweep, lo, hi, beta_e, cov, snap_theta, snap_u, snap_lp):
    st = _POOL_STATE
    kernel = st["kernel"]
    if cov is not None:
        kernel = ProposalKernel(kernel.kind, kernel.gamma, kernel.jitter, cov)
    slots = range(lo, hi)
    rngs = [_derive_rng(st["seed"], _TAG_SWEEP, sweep, s) for s in slots]
    return _sweep_slots(
        st["task"], st["transform"], kernel, beta_e, snap_theta, snap_u, snap_lp,
        list(slots), rngs,
    )


def _chunk_bounds(n, workers):
    edges = [round(i * n / workers) for i in range(workers + 1)]
    return [(edges[i], edges[i + 1]) for i in range(workers) if edges[i + 1] > edges[i]]


# ---------------------------------------------------------------------------
# drivers

def _make_schedule(cfg: RunConfig, n_stats: int) -> Schedule:
    mode = "multi" if cfg.algorithm == "sabc-multi" else "single"
    return Schedule(mode=mode, v=cfg.v, n_stats=n_stats)


def _update_temps(schedule: Schedule, pop: Population, U=None) -> None:
    """Barrier temperature refresh: recompute mean energies, internal and
    external temperatures.  Raises TemperatureOverflowError at the guard.

    ``U`` lets the serial driver pass an incrementally maintained mean
    instead of paying the full reduction every iteration."""
    incremental = U is not None
    if not incremental:
        U = pop.u.mean(axis=0)
    pop.temps.U = U
    Uc = np.minimum(U, 0.5)
    if schedule.mode == "multi":
        if (Uc <= U_GUARD).any():
            bad = int(np.argmax(Uc <= U_GUARD))
            raise TemperatureOverflowError(
                f"statistic {bad} hit the energy floor", stat_index=bad
            )
        pop.temps.beta_e = update_beta_e_multi(schedule, Uc)
    else:
        u_total = float(np.mean(U)) if incremental else float(pop.u.mean())
        u_total = min(u_total, 0.5)
        if u_total <= U_GUARD:
            raise TemperatureOverflowError("total energy hit the floor")
        pop.temps.beta_e = np.full(pop.n_stats, update_beta_e_single(schedule, u_total))
    pop.temps.beta = _state_beta(U)


def run_sabc(task: Task, cfg: RunConfig, progress=None) -> RunRecord:
    """Run the annealed sampler and return the full run record.

    ``cfg.updates`` counts individual particle updates; the parallel driver
    rounds it down to whole population sweeps.  ``progress``, if given, is
    called at every barrier with (sweep, U, beta_e, accept_rate).
    """
    cfg.validate()
    if cfg.algorithm not in ("sabc-single", "sabc-multi"):
        raise ValueError(f"run_sabc cannot run algorithm {cfg.algorithm!r}")
    t_start = time.perf_counter()
    pop, transform = initialize(task, cfg.particles, cfg.seed)
    kernel = ProposalKernel(cfg.kernel, cfg.gamma, cfg.jitter).resolve(task.dim_theta)
    kernel.adapt(pop.theta)
    schedule = _make_schedule(cfg, task.dim_stats)
    driver_rng = _derive_rng(cfg.seed, _TAG_DRIVER)
    n = pop.size
    sweeps = cfg.updates // n
    if sweeps < 1:
        raise ValueError("updates must cover at least one population sweep")

    traj_u, traj_beta_e, traj_acc, jump_ess = [], [], [], []
    status = "ok"

    pop = importance_jump(pop, cfg.delta, driver_rng)  # initial jump (a no-op at beta_e = 0)
    jump_ess.append(pop.ess)

    def barrier(sweep_idx, accepted_in_window):
        _update_temps(schedule, pop)
        rate = accepted_in_window / n
        traj_u.append(pop.temps.U.copy())
        traj_beta_e.append(pop.temps.beta_e.copy())
        traj_acc.append(rate)
        if pop.accepted_since_jump >= 2 * n:
            importance_jump(pop, cfg.delta, driver_rng)
            jump_ess.append(pop.ess)
        if progress is not None:
            progress(sweep_idx, pop.temps.U, pop.temps.beta_e, rate)

    try:
        if cfg.driver == "serial":
            window_accepts = 0
            u_mean = pop.u.mean(axis=0)
            for m in range(sweeps * n):
                alpha = int(driver_rng.integers(n))
                u_old = pop.u[alpha].copy()
                if metropolis_step(pop, task, transform, kernel, alpha, pop.rng_streams[alpha]):
                    window_accepts += 1
                    u_mean = u_mean + (pop.u[alpha] - u_old) / n
                # temperatures refresh after every update in the serial driver
                _update_temps(schedule, pop, U=u_mean)
                if pop.accepted_since_jump >= 2 * n:
                    importance_jump(pop, cfg.delta, driver_rng)
                    jump_ess.append(pop.ess)
                    u_mean = pop.u.mean(axis=0)
                if (m + 1) % n == 0:
                    sweep_idx = (m + 1) // n - 1
                    u_mean = pop.u.mean(axis=0)  # kill accumulated drift
                    traj_u.append(u_mean.copy())
                    traj_beta_e.append(pop.temps.beta_e.copy())
                    traj_acc.append(window_accepts / n)
                    if progress is not None:
                        progress(sweep_idx, u_mean, pop.temps.beta_e, window_accepts / n)
                    window_accepts = 0
                    kernel.adapt(pop.theta)
        else:
            pool = None
            try:
                if cfg.workers > 1:
                    pool = ProcessPoolExecutor(
                        max_workers=cfg.workers,
                        initializer=_pool_init,
                        initargs=(task, transform, kernel, cfg.seed),
                    )
                for sweep in range(sweeps):
                    snap_theta = pop.theta.copy()
                    snap_u = pop.u.copy()
                    snap_lp = pop.log_prior.copy()
                    beta_e = pop.temps.beta_e.copy()
                    cov = kernel.cov if kernel.kind == "gaussian" else None
                    if pool is None:
                        res = [
                            _sweep_slots(
                                task, transform, kernel, beta_e,
                                snap_theta, snap_u, snap_lp,
                                list(range(n)), pop.rng_streams,
                            )
                        ]
                        bounds = [(0, n)]
                    else:
                        bounds = _chunk_bounds(n, cfg.workers)
                        futures = [
                            pool.submit(
                                _pool_sweep, sweep, lo, hi, beta_e, cov,
                                snap_theta, snap_u, snap_lp,
                            )
                            for lo, hi in bounds
                        ]
                        res = [f.result() for f in futures]
                    accepted = 0
                    for (lo, hi), r in zip(bounds, res):
                        acc = r["accept"]
                        rows = np.arange(lo, hi)[acc]
                        pop.theta[rows] = r["theta"][acc]
                        pop.u[rows] = r["u"][acc]
                        pop.log_prior[rows] = r["lp"][acc]
                        accepted += int(acc.sum())
                        pop.sim_calls += r["sim_calls"]
                        pop.sim_failures += r["sim_failures"]
                    pop.accepted_since_jump += accepted
                    pop.total_accepted += accepted
                    barrier(sweep, accepted)
                    kernel.adapt(pop.theta)
            finally:
                if pool is not None:
                    pool.shutdown()
    except TemperatureOverflowError:
        status = "converged-to-floor"

    n_sweeps = len(traj_u)
    return RunRecord(
        config=cfg.to_dict(),
        posterior=pop.theta.copy(),
        traj_u=np.asarray(traj_u).reshape(n_sweeps, pop.n_stats),
        traj_beta_e=np.asarray(traj_beta_e).reshape(n_sweeps, pop.n_stats),
        traj_accept=np.asarray(traj_acc, dtype=float),
        sim_calls=pop.sim_calls,
        sim_failures=pop.sim_failures,
        jump_ess=[float(e) for e in jump_ess],
        status=status,
        wallclock=time.perf_counter() - t_start,
        energy_tables=transform.tables.copy(),
        extra={},
    )
