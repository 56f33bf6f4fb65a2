"""Batched adaptive Runge-Kutta integration.

A Dormand-Prince 5(4) stepper that advances a whole batch of independent
initial-value problems on a shared adaptive grid.  The step controller uses
the worst per-trajectory error, so every trajectory individually satisfies
the requested tolerance.  Sharing steps keeps the per-trajectory cost tiny,
which is what makes simulation-heavy inference on ODE models feasible here.
"""

from __future__ import annotations

import numpy as np

__all__ = ["IntegrationError", "rk45_batch"]

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


class IntegrationError(RuntimeError):
    """Step size underflowed; the problem is too stiff for this stepper."""


def rk45_batch(f, t_span, y0, t_eval, rtol=1e-6, atol=1e-8):
    """Integrate dy/dt = f(t, y) for a batch of initial states.

    Parameters
    ----------
    f : callable
        Right-hand side mapping ``(t, y)`` with ``y`` of shape (batch, m)
        to an array of the same shape.
    t_span : (float, float)
        Integration interval (t0, t_end).
    y0 : array (batch, m)
        Initial states at t0.
    t_eval : array (T,)
        Non-decreasing output times inside ``t_span``; points at or before
        t0 return the initial state.
    rtol, atol : float
        Error tolerances applied per trajectory (RMS-norm over components).

    Returns
    -------
    array (batch, T, m) of solution values at ``t_eval``.
    """
    t0, t_end = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    if y.ndim != 2:
        raise ValueError("y0 must be (batch, m)")
    t_eval = np.asarray(t_eval, dtype=float)
    if (np.diff(t_eval) < 0).any() or t_eval[-1] > t_end + 1e-12:
        raise ValueError("t_eval must be non-decreasing and inside t_span")

    out = np.empty((y.shape[0], t_eval.size, y.shape[1]))
    ti = 0
    t = t0
    while ti < t_eval.size and t_eval[ti] <= t:
        out[:, ti] = y
        ti += 1

    h_ctrl = (t_end - t0) / 100.0
    k = [None] * 7
    k0 = f(t, y)
    while ti < t_eval.size:
        h = min(h_ctrl, t_end - t)
        capped = t + h >= t_eval[ti]
        if capped:
            h = t_eval[ti] - t
        k[0] = k0
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(1, 7):
                yi = y + h * sum(a * k[j] for j, a in enumerate(_A[i]) if a)
                k[i] = f(t + _C[i] * h, yi)
            y5 = y + h * sum(b * k[j] for j, b in enumerate(_B5) if b)
            err = h * sum(e * k[j] for j, e in enumerate(_E) if e)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
            enorm = float(np.sqrt(np.mean((err / scale) ** 2, axis=1)).max())
        if np.isfinite(enorm) and enorm <= 1.0:
            t = t + h
            y = y5
            k0 = k[6]  # FSAL: last stage was evaluated at (t+h, y5)
            if capped or t >= t_eval[ti] - 1e-12 * max(1.0, abs(t)):
                out[:, ti] = y
                ti += 1
            factor = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm**-0.2))
            h_ctrl = max(h, h_ctrl) * factor
        else:
            shrink = 0.9 * enorm**-0.25 if np.isfinite(enorm) else 0.1
            h_ctrl = h * max(0.1, shrink)
            if h_ctrl <= 1e-12 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t = {t}")
    return out
