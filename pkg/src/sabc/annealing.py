"""Closed-form thermodynamics of the adaptive annealing schedule.

Everything in here is a pure function of its arguments: the combinatorial
coefficients, the linear-response (Onsager) matrix and its inverse metric on
energy space, the power-law geodesic that minimises entropy production, the
relation between a population's mean energy and its inverse temperature, and
the temperature-update rules for the single- and multi-temperature samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "U_GUARD",
    "TemperatureOverflowError",
    "Schedule",
    "TemperatureState",
    "catalan_coeff",
    "u_of_beta",
    "beta_of_u",
    "update_beta_e_multi",
    "update_beta_e_single",
    "onsager_matrix",
    "metric",
    "geodesic_u",
    "onsager_mc_estimate",
]

# Mean energies below this imply inverse temperatures beyond float range;
# crossing it is a controlled stop, not an overflow.
U_GUARD = 1e-12

# Force exponents are clamped here so the schedule stays finite even when the
# energy vector is spread over many orders of magnitude.
_LOG_FORCE_MAX = 690.0


class TemperatureOverflowError(RuntimeError):
    """Mean energy fell to the guard floor; the run cannot anneal further."""

    def __init__(self, message: str, stat_index: int | None = None):
        super().__init__(message)
        self.stat_index = stat_index


def catalan_coeff(n: int) -> int:
    """(2n+2)! / ((n+1)! (n+2)!), exactly.

    The sequence 1, 2, 5, 14, 42, ... of shifted Catalan numbers; it is the
    dimension-dependent constant in the closed-form Onsager matrix.
    """
    if n < 0 or n > 30:
        raise ValueError(f"catalan_coeff defined for 0 <= n <= 30, got {n}")
    return math.factorial(2 * n + 2) // (math.factorial(n + 1) * math.factorial(n + 2))


def u_of_beta(beta):
    """Mean energy of the tempered distribution prop. to exp(-beta*u) on [0, 1].

    Equals (1 - e^-b (1+b)) / (b (1 - e^-b)); evaluated as 1/b - 1/(e^b - 1)
    with a series expansion below 1e-4 where the direct form cancels
    catastrophically.  Strictly decreasing from 1/2 at beta = 0 towards 0,
    with u_of_beta(beta)*beta -> 1.
    """
    b = np.asarray(beta, dtype=float)
    if not np.isfinite(b).all() or (b < 0).any():
        raise ValueError("beta must be finite and >= 0")
    out = np.empty_like(b)
    small = b < 1e-4
    bs = b[small]
    out[small] = 0.5 - bs / 12.0 + bs**3 / 720.0
    bl = b[~small]
    with np.errstate(over="ignore"):
        out[~small] = 1.0 / bl - 1.0 / np.expm1(bl)
    return float(out) if np.isscalar(beta) or np.ndim(beta) == 0 else out


def beta_of_u(U, tol: float = 1e-10, max_iter: int = 200):
    """Invert :func:`u_of_beta`: the inverse temperature whose tempered mean
    energy equals ``U``.

    Bisection on [0, 4/U] until the residual in U-space drops below ``tol``;
    monotonicity of u_of_beta makes the bracket valid unconditionally.
    Accepts a scalar or vector of values in (guard, 1/2]; U = 1/2 maps to
    exactly 0.
    """
    scalar = np.isscalar(U) or np.ndim(U) == 0
    u = np.atleast_1d(np.asarray(U, dtype=float))
    if not np.isfinite(u).all():
        raise ValueError("U must be finite")
    if (u > 0.5).any():
        bad = int(np.argmax(u > 0.5))
        raise ValueError(
            f"U[{bad}] = {u[bad]} > 1/2: population energy above the prior mean"
        )
    if (u <= U_GUARD).any():
        bad = int(np.argmax(u <= U_GUARD))
        raise TemperatureOverflowError(
            f"temperature overflow: U[{bad}] = {u[bad]} at or below guard {U_GUARD}",
            stat_index=bad,
        )
    lo = np.zeros_like(u)
    hi = 4.0 / u
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        val = u_of_beta(mid)
        too_cold = val < u  # u_of_beta decreasing: overshoot in beta
        hi = np.where(too_cold, mid, hi)
        lo = np.where(too_cold, lo, mid)
        if np.abs(val - u).max() <= tol:
            break
        mid = 0.5 * (lo + hi)
    out = np.where(u == 0.5, 0.0, mid)
    return float(out[0]) if scalar else out


@dataclass
class Schedule:
    """Annealing-schedule parameters.

    ``mode`` is "single" (all external temperatures tied) or "multi" (one per
    statistic); ``v`` is the annealing velocity along the geodesic.  ``c_n``
    defaults to the coefficient for ``n_stats`` statistics with the overall
    constant absorbed into ``v``.
    """

    mode: str
    v: float
    n_stats: int
    c_n: float = field(default=None)

    def __post_init__(self):
        if self.mode not in ("single", "multi"):
            raise ValueError(f"mode must be 'single' or 'multi', got {self.mode!r}")
        if not self.v >= 0:
            raise ValueError("annealing velocity v must be >= 0")
        if self.n_stats < 1:
            raise ValueError("n_stats must be >= 1")
        if self.c_n is None:
            self.c_n = float(catalan_coeff(self.n_stats))


@dataclass
class TemperatureState:
    """External temperatures, internal temperatures, and the mean energies
    they are derived from.  In single mode all beta_e entries are equal."""

    beta_e: np.ndarray
    beta: np.ndarray
    U: np.ndarray


def _log_force_multi(v: float, U: np.ndarray, n: int, c_n: float) -> np.ndarray:
    # F_i = v (1 + sum_j (U_j/U_i)^{n/2}) / (c_n (n+1) U_i^{1+n/2} prod_j U_j/U_i),
    # evaluated in log space: energy ratios can span hundreds of decades.
    logU = np.log(U)
    diff = logU[None, :] - logU[:, None]  # diff[i, j] = log(U_j / U_i)
    expo = 0.5 * n * diff
    m = np.maximum(0.0, expo.max(axis=1))
    log_num = m + np.log(np.exp(-m) + np.exp(expo - m[:, None]).sum(axis=1))
    log_den = (
        math.log(c_n) + math.log(n + 1) + (1 + 0.5 * n) * logU + diff.sum(axis=1)
    )
    return math.log(v) + log_num - log_den


def update_beta_e_multi(schedule: Schedule, U: np.ndarray) -> np.ndarray:
    """External inverse temperatures for the multi-temperature schedule.

    beta_e_i = beta(U_i) + thermodynamic force; the force is the geodesic
    velocity pulled back through the metric and is strictly positive for
    v > 0, so the schedule never cools.
    """
    if schedule.mode != "multi":
        raise ValueError("update_beta_e_multi requires a multi-mode schedule")
    U = np.asarray(U, dtype=float)
    if U.shape != (schedule.n_stats,):
        raise ValueError(f"expected {schedule.n_stats} energies, got shape {U.shape}")
    beta = beta_of_u(U)  # raises on guard violation, carrying the index
    if schedule.v == 0:
        return beta
    log_f = _log_force_multi(schedule.v, U, schedule.n_stats, schedule.c_n)
    return beta + np.exp(np.minimum(log_f, _LOG_FORCE_MAX))


def update_beta_e_single(schedule: Schedule, U_total: float) -> float:
    """External inverse temperature for the tied-temperature schedule.

    The population's statistic-averaged mean energy is treated as one
    effective statistic, so the force is the n = 1 on-diagonal term:
    beta_e = beta(U) + (v / c_1) * U^(-3/2).
    """
    if schedule.mode != "single":
        raise ValueError("update_beta_e_single requires a single-mode schedule")
    beta = beta_of_u(float(U_total))
    if schedule.v == 0:
        return beta
    c1 = float(catalan_coeff(1))
    return beta + (schedule.v / c1) * float(U_total) ** -1.5


def onsager_matrix(U: np.ndarray, c_n: float) -> np.ndarray:
    """Closed-form linear-response matrix relating energy fluxes to forces.

    L[i, j] = -c_n (prod_k U_k) U_i U_j (-1 + delta_ij (n+1)).  Negative on
    the diagonal, positive off it.
    """
    U = np.asarray(U, dtype=float)
    if (U <= 0).any():
        raise ValueError("all energies must be positive")
    n = U.size
    sign = -1.0 + (n + 1) * np.eye(n)
    return -c_n * np.prod(U) * np.outer(U, U) * sign


def metric(U: np.ndarray, c_n: float) -> np.ndarray:
    """Riemannian metric on energy space: the negative inverse of
    :func:`onsager_matrix`.

    g[i, j] = (delta_ij + 1) / (c_n (n+1) U_i U_j prod_k U_k); symmetric
    positive definite for any positive energy vector.
    """
    U = np.asarray(U, dtype=float)
    if (U <= 0).any():
        raise ValueError("all energies must be positive")
    n = U.size
    return (np.eye(n) + 1.0) / (c_n * (n + 1) * np.outer(U, U) * np.prod(U))


def geodesic_u(t, U0: np.ndarray, v: float, n: int) -> np.ndarray:
    """Minimal-entropy-production trajectory of the mean energies.

    Componentwise U0_i (v n t / 2 + 1)^(-2/n): a power-law decay that is a
    straight line towards the origin in energy space.
    """
    U0 = np.asarray(U0, dtype=float)
    return U0 * (0.5 * v * n * np.asarray(t, dtype=float) + 1.0) ** (-2.0 / n)


def onsager_mc_estimate(n: int, samples: int, rng, lam: float = 0.5):
    """Importance-sampling estimate of the rectified-energy response integral.

    Estimates L_n[i, j] = int y_i y_j step(sum_k y_k) prod_k min(1, e^-y_k) dy,
    whose closed form is catalan_coeff(n) * (-1 + delta_ij (n+1)).  Draws each
    coordinate from an asymmetric Laplace proposal (Exp(1) right tail,
    Exp(lam) left tail); lam < 1 keeps the estimator's variance finite under
    the Heaviside constraint.

    Returns ``(estimate, stderr)`` as (n, n) matrices.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if not 0 < lam < 1:
        raise ValueError("lam must be in (0, 1)")
    p_pos = lam / (1.0 + lam)
    chunk = min(samples, 1_000_000)
    # accumulate first and second moments chunkwise to keep memory flat
    s1 = np.zeros((n, n))
    s2 = np.zeros((n, n))
    total = 0
    while total < samples:
        m = min(chunk, samples - total)
        pos = rng.random((m, n)) < p_pos
        y = np.where(pos, 1.0, -1.0 / lam) * rng.exponential(1.0, (m, n))
        # per-coordinate log weight of min(1, e^-y)/proposal
        logw = np.where(pos, -math.log(p_pos), -math.log(p_pos) - lam * y)
        w = np.exp(logw.sum(axis=1))
        w[y.sum(axis=1) <= 0] = 0.0
        yw = y * w[:, None]
        s1 += yw.T @ y
        s2 += (yw**2).T @ y**2
        total += m
    est = s1 / total
    var = s2 / total - est**2
    se = np.sqrt(np.maximum(var, 0.0) / total)
    return est, se
