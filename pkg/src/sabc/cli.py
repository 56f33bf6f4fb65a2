"""Experiment harness: ``run``, ``verify`` and ``benchmark`` subcommands.

``run`` executes one configured sampler run and writes three artefacts into
the output directory: posterior.csv, trajectories.csv and record.json.
``verify`` Monte-Carlo-checks the closed-form response integrals that the
annealing schedule is built on.  ``benchmark`` runs all three samplers over
a list of seeds against a task's reference posterior and writes metrics.csv.

Config files are flat ``key = value`` text; '#' starts a comment.  Exit
codes: 0 success (including a run that annealed down to the energy floor),
1 runtime failure, 2 configuration error (in which case nothing is written).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .annealing import catalan_coeff, onsager_mc_estimate
from .metrics import c2st, mmd
from .oracles import get_oracle
from .records import ConfigError, RunConfig, RunRecord, _atomic_write, _fmt
from .sampler import run_sabc
from .smc import run_smcabc
from .tasks import get_task

__all__ = ["main", "cmd_run", "cmd_verify", "cmd_benchmark", "parse_config_file"]

_BOOL_FIELDS = ()
_INT_FIELDS = ("particles", "updates", "seed", "workers")
_FLOAT_FIELDS = ("v", "delta", "jitter", "gamma", "decay", "ess_threshold")
_STR_FIELDS = ("task", "algorithm", "kernel", "driver", "out")


def parse_config_file(path: str) -> RunConfig:
    """Parse a flat key = value run configuration.

    Raises ConfigError with a line-numbered diagnostic on unknown keys,
    malformed lines, or bad values.
    """
    values: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _INT_FIELDS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(key, f"line {lineno}: expected integer, got {value!r}") from None
        elif key in _FLOAT_FIELDS:
            if key == "gamma" and value.lower() in ("auto", "none", ""):
                values[key] = None
                continue
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(key, f"line {lineno}: expected number, got {value!r}") from None
        elif key in _STR_FIELDS:
            values[key] = value
        else:
            raise ConfigError(key, f"line {lineno}: unknown field")
    return RunConfig.from_dict(values)


def cmd_run(config_path: str, seed=None, workers=None, out=None) -> int:
    try:
        cfg = parse_config_file(config_path)
        if seed is not None:
            cfg.seed = seed
        if workers is not None:
            cfg.workers = workers
        if out is not None:
            cfg.out = out
        cfg.validate()
        task = get_task(cfg.task)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.algorithm == "smc-abc":
            record = run_smcabc(task, cfg)
        else:
            record = run_sabc(task, cfg)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        record.write_posterior_csv(str(out_dir / "posterior.csv"))
        record.write_trajectories_csv(str(out_dir / "trajectories.csv"))
        record.save(str(out_dir / "record.json"))
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    print(f"status: {record.status}  sweeps: {record.n_sweeps}  "
          f"simulations: {record.sim_calls}  wallclock: {record.wallclock:.1f}s")
    return 0


def cmd_verify(n_max: int = 3, samples: int = 1_000_000, seed: int = 1) -> int:
    """Monte-Carlo check of the closed-form response matrix.

    For each statistic count n the importance-sampling estimate of the
    response integral must match c_n (-1 + delta_ij (n+1)) within three
    standard errors on the diagonal and off it.
    """
    if n_max > 4:
        print("verify: n_max capped at 4", file=sys.stderr)
        return 2
    if samples < 100_000:
        print("verify: need at least 1e5 samples", file=sys.stderr)
        return 2
    ok = True
    print(f"{'n':>2} {'entry':>6} {'estimate':>12} {'stderr':>10} {'target':>8} {'z':>7}")
    for n in range(1, n_max + 1):
        rng = np.random.default_rng((seed, n))
        est, se = onsager_mc_estimate(n, samples, rng)
        c_n = catalan_coeff(n)
        checks = [("Q", est[0, 0], se[0, 0], float(n * c_n))]
        if n > 1:
            checks.append(("M", est[0, 1], se[0, 1], float(-c_n)))
        for label, value, err, target in checks:
            z = (value - target) / err
            flag = "" if abs(z) <= 3.0 else "  <-- FAIL"
            ok &= abs(z) <= 3.0
            print(f"{n:>2} {label:>6} {value:>12.4f} {err:>10.4f} {target:>8.1f} {z:>7.2f}{flag}")
    print("verification:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_benchmark(task_name: str, seeds, particles: int = 1000, updates: int = 200_000,
                  workers: int = 1, out: str = ".", subsample: int = 10_000,
                  cache_dir=None, v: float = 1.0) -> int:
    """Run all three samplers across seeds and score them against the oracle."""
    try:
        task = get_task(task_name)
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    oracle = get_oracle(task, cache_dir=cache_dir)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["task,algorithm,seed,mmd,c2st,simulator_calls,wallclock"]
    rng = np.random.default_rng(0)
    for seed in seeds:
        for algorithm in ("sabc-single", "sabc-multi", "smc-abc", "prior"):
            t0 = time.perf_counter()
            if algorithm == "prior":
                draws = np.asarray(task.prior_sample(np.random.default_rng(seed), particles))
                sample = draws if draws.ndim == 2 else draws[:, None]
                calls = 0
                wallclock = time.perf_counter() - t0
            else:
                cfg = RunConfig(task=task_name, algorithm=algorithm, particles=particles,
                                updates=updates, seed=seed, workers=workers, v=v)
                record = run_smcabc(task, cfg) if algorithm == "smc-abc" else run_sabc(task, cfg)
                sample = record.posterior
                calls = record.sim_calls
                wallclock = record.wallclock
            m = min(subsample, sample.shape[0], oracle.samples.shape[0])
            ref = oracle.samples[rng.choice(oracle.samples.shape[0], m, replace=False)]
            got = sample[rng.choice(sample.shape[0], m, replace=False)] if sample.shape[0] > m else sample
            mmd_value = mmd(got, ref)
            c2st_value = c2st(got, ref) if m >= 1000 else float("nan")
            rows.append(
                f"{task_name},{algorithm},{seed},{_fmt(mmd_value)},{_fmt(c2st_value)},"
                f"{calls},{_fmt(wallclock)}"
            )
            print(rows[-1])
    _atomic_write(str(out_dir / "metrics.csv"), "\n".join(rows) + "\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sabc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured sampler run")
    p_run.add_argument("--config", required=True, help="path to key = value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--workers", type=int, default=None, help="override worker count")
    p_run.add_argument("--out", default=None, help="override output directory")

    p_verify = sub.add_parser("verify", help="Monte-Carlo check of the closed-form schedule")
    p_verify.add_argument("--n-max", type=int, default=3)
    p_verify.add_argument("--samples", type=int, default=1_000_000)
    p_verify.add_argument("--seed", type=int, default=1)

    p_bench = sub.add_parser("benchmark", help="compare samplers against the oracle")
    p_bench.add_argument("--task", required=True)
    p_bench.add_argument("--seeds", default="1,2,3", help="comma-separated seed list")
    p_bench.add_argument("--particles", type=int, default=1000)
    p_bench.add_argument("--updates", type=int, default=200_000)
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--v", type=float, default=1.0, help="annealing velocity")
    p_bench.add_argument("--out", default=".")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, seed=args.seed, workers=args.workers, out=args.out)
    if args.command == "verify":
        return cmd_verify(n_max=args.n_max, samples=args.samples, seed=args.seed)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    return cmd_benchmark(args.task, seeds, particles=args.particles,
                         updates=args.updates, workers=args.workers, out=args.out,
                         v=args.v)


if __name__ == "__main__":
    raise SystemExit(main())
