"""Per-statistic rectification of distances into [0, 1] energies.

Each summary statistic gets its own empirical-CDF table, built once from the
initial prior sample and frozen afterwards.  Evaluating the table maps a raw
distance to an energy that is uniformly distributed under the prior, which is
what makes energies of different statistics comparable.  The step function of
the raw empirical CDF is replaced by linear ramps so that the map is strictly
increasing between distinct table values (particles never see a locally flat
acceptance landscape there).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EnergyTransform", "build_transform", "to_energy", "to_energy_vector"]


@dataclass(frozen=True)
class EnergyTransform:
    """Frozen per-statistic distance-to-energy tables.

    ``tables`` has shape ``(n_stats, n_samples)``; every row is sorted
    non-decreasing.  Immutable after construction and therefore safe to share
    across worker processes.
    """

    tables: np.ndarray

    def __post_init__(self):
        tables = np.asarray(self.tables, dtype=float)
        if tables.ndim != 2 or tables.shape[1] < 2:
            raise ValueError("tables must be (n_stats, n_samples) with n_samples >= 2")
        object.__setattr__(self, "tables", tables)

    @property
    def n_stats(self) -> int:
        return self.tables.shape[0]

    @property
    def n_samples(self) -> int:
        return self.tables.shape[1]

    @property
    def _grid(self) -> np.ndarray:
        # ranks 0..N-1 scaled to land exactly on [0, 1]
        n = self.n_samples
        return np.arange(n) / (n - 1)

    def energies(self, rhos: np.ndarray) -> np.ndarray:
        """Map distances to energies, one column per statistic.

        ``rhos`` may be a single n-vector or a ``(batch, n_stats)`` matrix;
        the result has the same shape with every entry in [0, 1].
        """
        rhos = np.asarray(rhos, dtype=float)
        single = rhos.ndim == 1
        mat = rhos[None, :] if single else rhos
        if mat.shape[1] != self.n_stats:
            raise ValueError(
                f"expected {self.n_stats} statistics, got {mat.shape[1]}"
            )
        if np.isnan(mat).any():
            raise ValueError("NaN distance passed to energy transform")
        grid = self._grid
        out = np.empty_like(mat)
        for i in range(self.n_stats):
            out[:, i] = np.interp(mat[:, i], self.tables[i], grid)
        return out[0] if single else out

    def to_dict(self) -> dict:
        return {"tables": self.tables.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyTransform":
        return cls(np.asarray(d["tables"], dtype=float))


def build_transform(prior_distances: np.ndarray) -> EnergyTransform:
    """Build the rectification tables from an ``(n_samples, n_stats)`` matrix
    of prior-sample distances.

    Each column is sorted into its own table; ties are kept.  Requires at
    least two samples and finite, non-negative distances.
    """
    mat = np.asarray(prior_distances, dtype=float)
    if mat.ndim == 1:
        mat = mat[:, None]
    if mat.shape[0] < 2:
        raise ValueError("need at least 2 prior samples to build energy tables")
    for i in range(mat.shape[1]):
        col = mat[:, i]
        if not np.isfinite(col).all():
            raise ValueError(f"statistic {i}: non-finite distance in prior sample")
        if (col < 0).any():
            raise ValueError(f"statistic {i}: negative distance in prior sample")
    return EnergyTransform(np.sort(mat, axis=0).T.copy())


def to_energy(transform: EnergyTransform, stat_index: int, rho: float) -> float:
    """Energy of a single distance under one statistic's table.

    Piecewise-linear empirical CDF: 0 below the table minimum, 1 at and above
    the maximum, rank/(N-1) interpolated linearly in between.  At a run of
    duplicate table values the first index governs the limit from below and
    the last index gives the value at the point itself.
    """
    if not 0 <= stat_index < transform.n_stats:
        raise ValueError(f"stat_index {stat_index} outside 0..{transform.n_stats - 1}")
    if np.isnan(rho):
        raise ValueError("NaN distance passed to energy transform")
    return float(np.interp(rho, transform.tables[stat_index], transform._grid))


def to_energy_vector(transform: EnergyTransform, rhos: np.ndarray) -> np.ndarray:
    """Componentwise :func:`to_energy` over an n-vector of distances."""
    rhos = np.asarray(rhos, dtype=float)
    if rhos.shape != (transform.n_stats,):
        raise ValueError(
            f"expected distance vector of length {transform.n_stats}, got shape {rhos.shape}"
        )
    return transform.energies(rhos)
