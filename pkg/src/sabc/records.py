"""Run configuration and the serialized run record.

The record is the single machine-readable artefact of a run: the posterior
sample, per-sweep trajectories of mean energies / external temperatures /
acceptance rate, the importance-jump log, counters, and a verbatim echo of
the configuration.  JSON serialisation round-trips floats exactly (shortest
repr), so a reloaded record compares equal to the in-memory one.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, fields, asdict

import numpy as np

__all__ = ["ConfigError", "RunConfig", "RunRecord"]

ALGORITHMS = ("sabc-single", "sabc-multi", "smc-abc")


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending field name."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field_name = field_name


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    task: str = ""
    algorithm: str = ""
    particles: int = 1000
    updates: int = 100_000
    v: float = 1.0
    delta: float = 0.1
    kernel: str = "de"
    gamma: float | None = None
    jitter: float = 1e-6
    seed: int = 1
    workers: int = 1
    driver: str = "parallel"
    out: str = "."
    decay: float = 0.9
    ess_threshold: float = 0.2

    def validate(self) -> "RunConfig":
        # registry membership is the CLI's concern; custom Task instances can
        # run under any name programmatically
        if not self.task:
            raise ConfigError("task", "missing")
        if not self.algorithm:
            raise ConfigError("algorithm", "missing")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"must be one of {ALGORITHMS}")
        for name in ("particles", "updates", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        for name in ("v", "delta", "jitter", "decay", "ess_threshold"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value >= 0):
                raise ConfigError(name, f"must be a non-negative number, got {value!r}")
        if not 0 < self.decay < 1:
            raise ConfigError("decay", "must be in (0, 1)")
        if not 0 < self.ess_threshold < 1:
            raise ConfigError("ess_threshold", "must be in (0, 1)")
        if self.kernel not in ("de", "gaussian"):
            raise ConfigError("kernel", "must be 'de' or 'gaussian'")
        if self.driver not in ("parallel", "serial"):
            raise ConfigError("driver", "must be 'parallel' or 'serial'")
        if self.gamma is not None and not self.gamma >= 0:
            raise ConfigError("gamma", "must be >= 0 (or omitted for the default)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        return cls(**d)


def _fmt(x: float) -> str:
    # shortest decimal that round-trips to the same float64
    return repr(float(x))


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunRecord:
    """Serialized output of one sampler run."""

    config: dict
    posterior: np.ndarray  # (N, d)
    traj_u: np.ndarray  # (sweeps, n)
    traj_beta_e: np.ndarray  # (sweeps, n)
    traj_accept: np.ndarray  # (sweeps,)
    sim_calls: int
    sim_failures: int
    jump_ess: list
    status: str
    wallclock: float
    energy_tables: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_sweeps(self) -> int:
        return self.traj_accept.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "posterior": self.posterior.tolist(),
            "traj_u": self.traj_u.tolist(),
            "traj_beta_e": self.traj_beta_e.tolist(),
            "traj_accept": self.traj_accept.tolist(),
            "sim_calls": self.sim_calls,
            "sim_failures": self.sim_failures,
            "jump_ess": list(self.jump_ess),
            "status": self.status,
            "wallclock": self.wallclock,
            "energy_tables": None if self.energy_tables is None else self.energy_tables.tolist(),
            "extra": self.extra,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunRecord":
        tables = d.get("energy_tables")
        return cls(
            config=d["config"],
            posterior=np.asarray(d["posterior"], dtype=float),
            traj_u=np.asarray(d["traj_u"], dtype=float),
            traj_beta_e=np.asarray(d["traj_beta_e"], dtype=float),
            traj_accept=np.asarray(d["traj_accept"], dtype=float),
            sim_calls=int(d["sim_calls"]),
            sim_failures=int(d["sim_failures"]),
            jump_ess=[float(x) for x in d["jump_ess"]],
            status=d["status"],
            wallclock=float(d["wallclock"]),
            energy_tables=None if tables is None else np.asarray(tables, dtype=float),
            extra=d.get("extra", {}),
        )

    def save(self, path: str) -> None:
        _atomic_write(path, json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path: str) -> "RunRecord":
        with open(path) as handle:
            return cls.from_json_dict(json.load(handle))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunRecord):
            return NotImplemented
        arrays_equal = (
            np.array_equal(self.posterior, other.posterior)
            and np.array_equal(self.traj_u, other.traj_u)
            and np.array_equal(self.traj_beta_e, other.traj_beta_e)
            and np.array_equal(self.traj_accept, other.traj_accept)
            and (
                (self.energy_tables is None and other.energy_tables is None)
                or (
                    self.energy_tables is not None
                    and other.energy_tables is not None
                    and np.array_equal(self.energy_tables, other.energy_tables)
                )
            )
        )
        return (
            arrays_equal
            and self.config == other.config
            and self.sim_calls == other.sim_calls
            and self.sim_failures == other.sim_failures
            and self.jump_ess == other.jump_ess
            and self.status == other.status
            and self.wallclock == other.wallclock
            and self.extra == other.extra
        )

    # -- CSV surfaces -------------------------------------------------------
    def write_posterior_csv(self, path: str) -> None:
        d = self.posterior.shape[1]
        lines = [",".join(f"theta_{j + 1}" for j in range(d))]
        for row in self.posterior:
            lines.append(",".join(_fmt(x) for x in row))
        _atomic_write(path, "\n".join(lines) + "\n")

    def write_trajectories_csv(self, path: str) -> None:
        n = self.traj_u.shape[1]
        header = (
            ["sweep"]
            + [f"U_{i + 1}" for i in range(n)]
            + [f"beta_e_{i + 1}" for i in range(n)]
            + ["accept_rate"]
        )
        lines = [",".join(header)]
        for k in range(self.n_sweeps):
            cells = (
                [str(k)]
                + [_fmt(x) for x in self.traj_u[k]]
                + [_fmt(x) for x in self.traj_beta_e[k]]
                + [_fmt(self.traj_accept[k])]
            )
            lines.append(",".join(cells))
        _atomic_write(path, "\n".join(lines) + "\n")
