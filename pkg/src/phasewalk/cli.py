"""Command-line front end.

One invocation runs one suite (or the update-latency benchmark) and writes
three kinds of files into the output directory: newline-delimited trial
records (one file per ensemble), a JSON summary per ensemble, and a
run-metadata file echoing the fully-resolved configuration.  All outputs
are deterministic functions of (config, master_seed).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .bench import bench_updates, format_report
from .gaussian import GaussianState
from .oracles import RNG_ALGORITHM, SimulatedOracle, make_stream, sample_true_omega
from .particle import LiuWestConfig, pf_replay_ensemble
from .records import write_records
from .risk import frequentist_profile, run_ensemble, summarize, van_trees_bound
from .walker import UNWIND_MODES, WalkerConfig, run

SUITES = (
    "loss_histogram",
    "pf_comparison",
    "heisenberg_scaling",
    "risk_profile",
    "single_trial",
)

RUN_SCHEMA = "phasewalk.run.v1"
PF_RESULT_SCHEMA = "phasewalk.pf_result.v1"

# All defaults live here and are echoed into run metadata.
DEFAULTS = {
    "suite": None,
    "n_trials": 1000,
    "master_seed": 0,
    "output_dir": "phasewalk-out",
    "n_jobs": 1,
    "walker": {
        "mu0": 0.0,
        "sigma0": 1.0,
        "n_exp": 100,
        "tau_check": 0.01,
        "n_unwind": 2,
        "unwind_mode": "unconstrained",
        "max_total_experiments": 100_000,
    },
    "pf": None,
    "profile_grid_points": 50,
    "profile_grid_max": 4.0,
}


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key."""


@dataclasses.dataclass
class SuiteConfig:
    suite: str
    walker: WalkerConfig
    pf: LiuWestConfig | None
    n_trials: int
    master_seed: int
    output_dir: Path
    n_jobs: int = 1
    profile_grid_points: int = 50
    profile_grid_max: float = 4.0

    def resolved_dict(self) -> dict:
        d = {
            "suite": self.suite,
            "n_trials": self.n_trials,
            "master_seed": self.master_seed,
            "output_dir": str(self.output_dir),
            "n_jobs": self.n_jobs,
            "walker": dataclasses.asdict(self.walker),
            "pf": dataclasses.asdict(self.pf) if self.pf else None,
        }
        if self.suite == "risk_profile":
            d["profile_grid_points"] = self.profile_grid_points
            d["profile_grid_max"] = self.profile_grid_max
        return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phasewalk",
        description="Random-walk Bayesian phase estimation suites and benchmarks",
    )
    p.add_argument("--suite", choices=SUITES, help="experiment suite to run")
    p.add_argument("--config", type=Path, help="JSON config file (flags override it)")
    p.add_argument("--n-trials", type=int, help="trials per ensemble")
    p.add_argument("--n-exp", type=int, help="accepted-experiment budget per trial")
    p.add_argument("--n-unwind", type=int, help="unwinding steps per failed check")
    p.add_argument("--tau-check", type=float, help="consistency-check scale")
    p.add_argument("--unwind-mode", choices=UNWIND_MODES)
    p.add_argument("--mu0", type=float, help="prior mean")
    p.add_argument("--sigma0", type=float, help="prior standard deviation")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--pf-particles", type=int,
                   help="particle count for the pf_comparison suite")
    p.add_argument("--jobs", type=int, help="worker processes for ensembles")
    p.add_argument("--bench-updates", action="store_true",
                   help="run the update-latency benchmark and exit")
    return p


def _merge_config_file(cfg: dict, path: Path) -> None:
    try:
        with open(path) as fh:
            loaded = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config: {path} must contain a JSON object")
    for key, value in loaded.items():
        if key in ("walker", "pf"):
            if value is None:
                cfg[key] = None
                continue
            if not isinstance(value, dict):
                raise ConfigError(f"config key {key!r}: expected an object")
            base = dict(DEFAULTS["walker"]) if key == "walker" else {}
            if key == "walker":
                unknown = set(value) - set(base)
                if unknown:
                    raise ConfigError(
                        f"config key walker.{sorted(unknown)[0]!r}: unknown field"
                    )
                base.update(value)
                cfg[key] = base
            else:
                allowed = {"a", "resample_threshold", "n_particles"}
                unknown = set(value) - allowed
                if unknown:
                    raise ConfigError(
                        f"config key pf.{sorted(unknown)[0]!r}: unknown field"
                    )
                cfg[key] = value
        elif key in DEFAULTS:
            cfg[key] = value
        else:
            raise ConfigError(f"config key {key!r}: unknown key")


def parse_config(args: argparse.Namespace) -> SuiteConfig:
    """Resolve defaults, config file, and flags into a validated SuiteConfig."""
    cfg = json.loads(json.dumps(DEFAULTS))  # deep copy
    if args.config is not None:
        _merge_config_file(cfg, args.config)

    if args.suite is not None:
        cfg["suite"] = args.suite
    if args.n_trials is not None:
        cfg["n_trials"] = args.n_trials
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = str(args.out)
    if args.jobs is not None:
        cfg["n_jobs"] = args.jobs
    for flag, key in (
        ("n_exp", "n_exp"),
        ("n_unwind", "n_unwind"),
        ("tau_check", "tau_check"),
        ("unwind_mode", "unwind_mode"),
        ("mu0", "mu0"),
        ("sigma0", "sigma0"),
    ):
        value = getattr(args, flag)
        if value is not None:
            cfg["walker"][key] = value
    if args.pf_particles is not None:
        pf = cfg["pf"] or {}
        pf["n_particles"] = args.pf_particles
        cfg["pf"] = pf

    if cfg["suite"] is None:
        raise ConfigError("config key 'suite': required (flag --suite or config file)")
    if cfg["suite"] not in SUITES:
        raise ConfigError(f"config key 'suite': unknown suite {cfg['suite']!r}")
    if cfg["n_trials"] < 1:
        raise ConfigError(f"config key 'n_trials': must be >= 1, got {cfg['n_trials']}")
    if cfg["n_jobs"] < 1:
        raise ConfigError(f"config key 'n_jobs': must be >= 1, got {cfg['n_jobs']}")

    if cfg["suite"] == "pf_comparison" and cfg["pf"] is None:
        raise ConfigError(
            "config key 'pf': the pf_comparison suite requires a pf block "
            "(or --pf-particles)"
        )
    if cfg["suite"] != "pf_comparison" and cfg["pf"] is not None:
        raise ConfigError(
            f"config key 'pf': only valid for the pf_comparison suite, "
            f"not {cfg['suite']!r}"
        )

    try:
        walker = WalkerConfig(**cfg["walker"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key 'walker': {exc}") from exc
    pf = None
    if cfg["pf"] is not None:
        try:
            pf = LiuWestConfig(**cfg["pf"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'pf': {exc}") from exc

    return SuiteConfig(
        suite=cfg["suite"],
        walker=walker,
        pf=pf,
        n_trials=cfg["n_trials"],
        master_seed=cfg["master_seed"],
        output_dir=Path(cfg["output_dir"]),
        n_jobs=cfg["n_jobs"],
        profile_grid_points=cfg["profile_grid_points"],
        profile_grid_max=cfg["profile_grid_max"],
    )


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _sanitize(obj):
    """Replace non-finite floats for strict-JSON summary output."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else {"inf": 1 if obj > 0 else -1}
    return obj


def _write_run_metadata(config: SuiteConfig) -> None:
    _write_json(
        config.output_dir / "run.json",
        {
            "schema": RUN_SCHEMA,
            "version": __version__,
            "numpy_version": np.__version__,
            "rng": RNG_ALGORITHM,
            "backend": _backend.BACKEND,
            "config": _sanitize(config.resolved_dict()),
        },
    )


def _write_ensemble(config: SuiteConfig, records, tag: str = "",
                    profile=None, n_exp: int | None = None) -> dict:
    suffix = f"_{tag}" if tag else ""
    rec_path = config.output_dir / f"records{suffix}.jsonl"
    write_records(rec_path, records)
    summary = summarize(records, risk_profile=profile, n_exp=n_exp)
    sum_path = config.output_dir / f"summary{suffix}.json"
    _write_json(sum_path, _sanitize(summary.to_json_dict()))
    return summary.to_json_dict()


def run_suite(config: SuiteConfig) -> int:
    """Execute one suite; returns a process exit status."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    _write_run_metadata(config)
    w = config.walker

    if config.suite == "single_trial":
        rng = make_stream(config.master_seed, 0)
        omega = float(sample_true_omega(GaussianState(w.mu0, w.sigma0), rng))
        _, record = run(w, SimulatedOracle(omega, rng=rng), seed=0)
        _write_ensemble(config, [record], n_exp=w.n_exp)

    elif config.suite == "loss_histogram":
        for n_unwind in (0, 1, 2):
            cfg_k = dataclasses.replace(w, n_unwind=n_unwind)
            records = run_ensemble(
                cfg_k, config.n_trials, config.master_seed, n_jobs=config.n_jobs
            )
            _write_ensemble(config, records, tag=f"unwind{n_unwind}",
                            n_exp=cfg_k.n_exp)

    elif config.suite == "heisenberg_scaling":
        table = []
        for n_unwind in (0, 1, 2, 3):
            for n_exp in (25, 50, 75, 100):
                cfg_k = dataclasses.replace(w, n_unwind=n_unwind, n_exp=n_exp)
                records = run_ensemble(
                    cfg_k, config.n_trials, config.master_seed, n_jobs=config.n_jobs
                )
                s = _write_ensemble(
                    config, records, tag=f"nexp{n_exp}_unwind{n_unwind}",
                    n_exp=cfg_k.n_exp,
                )
                table.append(
                    {
                        "n_exp": n_exp,
                        "n_unwind": n_unwind,
                        "bayes_risk": s["bayes_risk"],
                        "median_loss": s["median_loss"],
                        "van_trees_bound": s["van_trees_bound"],
                        "risk_over_bound": s["bayes_risk"] / s["van_trees_bound"],
                    }
                )
        _write_json(
            config.output_dir / "scaling.json",
            _sanitize({"schema": "phasewalk.scaling.v1", "cells": table}),
        )

    elif config.suite == "risk_profile":
        grid = np.linspace(
            0.0, config.profile_grid_max, config.profile_grid_points
        ).tolist()
        records, summary = frequentist_profile(
            w, grid, config.n_trials, config.master_seed, n_jobs=config.n_jobs
        )
        rec_path = config.output_dir / "records.jsonl"
        write_records(rec_path, records)
        _write_json(
            config.output_dir / "summary.json",
            _sanitize(summary.to_json_dict()),
        )

    elif config.suite == "pf_comparison":
        records = run_ensemble(
            w, config.n_trials, config.master_seed, n_jobs=config.n_jobs
        )
        _write_ensemble(config, records, n_exp=w.n_exp)
        prior = GaussianState(w.mu0, w.sigma0)
        pf_results = pf_replay_ensemble(
            records, prior, config.pf, config.master_seed, n_jobs=config.n_jobs
        )
        with open(config.output_dir / "pf_results.jsonl", "w") as fh:
            for row in pf_results:
                fh.write(
                    json.dumps(
                        {"schema": PF_RESULT_SCHEMA, **_sanitize(row)},
                        allow_nan=False,
                        separators=(",", ":"),
                    )
                )
                fh.write("\n")
        rw_median = float(np.median([r.quadratic_loss for r in records]))
        pf_ok = [r["quadratic_loss"] for r in pf_results if not r["failed"]]
        pf_median = float(np.median(pf_ok)) if pf_ok else math.nan
        _write_json(
            config.output_dir / "comparison.json",
            _sanitize(
                {
                    "schema": "phasewalk.pf_comparison.v1",
                    "tau_check": w.tau_check,
                    "n_unwind": w.n_unwind,
                    "n_particles": config.pf.n_particles,
                    "walker_median_loss": rw_median,
                    "pf_median_loss": pf_median,
                    "pf_failed_trials": sum(r["failed"] for r in pf_results),
                    "pf_over_walker_median": (
                        pf_median / rw_median if rw_median > 0 else math.inf
                    ),
                    "van_trees_bound": van_trees_bound(w.n_exp),
                }
            ),
        )

    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.bench_updates:
        result = bench_updates()
        print(format_report(result))
        if args.out is not None:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "bench.json", {"schema": "phasewalk.bench.v1", **result})
        return 0

    try:
        config = parse_config(args)
    except ConfigError as exc:
        print(f"phasewalk: {exc}", file=sys.stderr)
        return 2

    try:
        return run_suite(config)
    except OSError as exc:
        print(f"phasewalk: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
