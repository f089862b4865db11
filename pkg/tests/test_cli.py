"""CLI tests: config resolution, suite outputs, determinism, round-trips."""

import json

import pytest

from phasewalk import read_records, summarize
from phasewalk.cli import ConfigError, build_parser, main, parse_config


def _parse(argv):
    return parse_config(build_parser().parse_args(argv))


class TestParseConfig:
    def test_defaults(self):
        cfg = _parse(["--suite", "single_trial"])
        w = cfg.walker
        assert (w.n_exp, w.n_unwind, w.tau_check) == (100, 2, 0.01)
        assert (w.mu0, w.sigma0) == (0.0, 1.0)
        assert w.unwind_mode == "unconstrained"
        assert w.max_total_experiments == 100_000
        assert cfg.master_seed == 0
        assert cfg.n_trials == 1000
        assert cfg.pf is None

    def test_flags_override(self):
        cfg = _parse(
            ["--suite", "loss_histogram", "--n-exp", "50", "--tau-check", "1.0",
             "--n-unwind", "3", "--unwind-mode", "constrained", "--seed", "9",
             "--n-trials", "25"]
        )
        assert cfg.walker.n_exp == 50
        assert cfg.walker.tau_check == 1.0
        assert cfg.walker.n_unwind == 3
        assert cfg.walker.constrained
        assert cfg.master_seed == 9
        assert cfg.n_trials == 25

    def test_config_file_and_flag_precedence(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "suite": "single_trial",
            "master_seed": 4,
            "walker": {"n_exp": 60, "tau_check": 0.5},
        }))
        cfg = _parse(["--config", str(path), "--seed", "11"])
        assert cfg.suite == "single_trial"
        assert cfg.master_seed == 11  # flag wins
        assert cfg.walker.n_exp == 60
        assert cfg.walker.tau_check == 0.5
        assert cfg.walker.n_unwind == 2  # untouched default

    def test_negative_unwind_rejected(self):
        with pytest.raises(ConfigError, match="n_unwind"):
            _parse(["--suite", "single_trial", "--n-unwind", "-1"])

    def test_pf_comparison_requires_pf_block(self):
        with pytest.raises(ConfigError, match="pf"):
            _parse(["--suite", "pf_comparison"])

    def test_pf_block_outside_pf_comparison_rejected(self):
        with pytest.raises(ConfigError, match="pf"):
            _parse(["--suite", "single_trial", "--pf-particles", "800"])

    def test_pf_particles_flag_builds_block(self):
        cfg = _parse(["--suite", "pf_comparison", "--pf-particles", "640"])
        assert cfg.pf.n_particles == 640
        assert cfg.pf.a == 0.98
        assert cfg.pf.resample_threshold == 0.5

    def test_unknown_config_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"suite": "single_trial", "bogus": 1}))
        with pytest.raises(ConfigError, match="bogus"):
            _parse(["--config", str(path)])

    def test_unknown_walker_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "suite": "single_trial", "walker": {"n_exps": 5},
        }))
        with pytest.raises(ConfigError, match="n_exps"):
            _parse(["--config", str(path)])

    def test_missing_suite_rejected(self):
        with pytest.raises(ConfigError, match="suite"):
            _parse(["--n-trials", "5"])

    def test_config_error_exit_code(self, capsys, tmp_path):
        code = main(["--suite", "pf_comparison", "--out", str(tmp_path)])
        assert code == 2
        assert "pf" in capsys.readouterr().err


class TestSuites:
    def test_single_trial_outputs(self, tmp_path):
        code = main(["--suite", "single_trial", "--seed", "5",
                     "--out", str(tmp_path / "a"), "--n-exp", "40",
                     "--tau-check", "1.0"])
        assert code == 0
        records = read_records(tmp_path / "a" / "records.jsonl")
        assert len(records) == 1
        meta = json.loads((tmp_path / "a" / "run.json").read_text())
        assert meta["schema"] == "phasewalk.run.v1"
        assert meta["config"]["walker"]["n_exp"] == 40
        assert meta["config"]["master_seed"] == 5
        assert meta["backend"] in ("compiled", "python")
        assert "Philox" in meta["rng"]

    def test_single_trial_byte_identical_across_runs(self, tmp_path):
        argv = ["--suite", "single_trial", "--seed", "3", "--n-exp", "60",
                "--tau-check", "1.0"]
        for d in ("r1", "r2"):
            assert main(argv + ["--out", str(tmp_path / d)]) == 0
        for name in ("records.jsonl", "summary.json"):
            a = (tmp_path / "r1" / name).read_bytes()
            b = (tmp_path / "r2" / name).read_bytes()
            assert a == b, name

    def test_loss_histogram_suite(self, tmp_path):
        out = tmp_path / "hist"
        code = main(["--suite", "loss_histogram", "--n-trials", "12",
                     "--n-exp", "25", "--tau-check", "1.0", "--seed", "1",
                     "--out", str(out)])
        assert code == 0
        for k in (0, 1, 2):
            assert (out / f"records_unwind{k}.jsonl").exists()
            summary = json.loads((out / f"summary_unwind{k}.json").read_text())
            assert summary["schema"] == "phasewalk.summary.v1"
            assert summary["n_trials"] == 12

    def test_summary_round_trips_from_records(self, tmp_path):
        out = tmp_path / "rt"
        main(["--suite", "loss_histogram", "--n-trials", "10", "--n-exp", "30",
              "--tau-check", "1.0", "--seed", "2", "--out", str(out)])
        for k in (0, 1, 2):
            written = json.loads((out / f"summary_unwind{k}.json").read_text())
            records = read_records(out / f"records_unwind{k}.jsonl")
            recomputed = summarize(records).to_json_dict()
            from phasewalk.cli import _sanitize

            assert _sanitize(recomputed) == written

    def test_pf_comparison_suite(self, tmp_path):
        out = tmp_path / "pf"
        code = main(["--suite", "pf_comparison", "--n-trials", "6",
                     "--n-exp", "25", "--tau-check", "1.0", "--n-unwind", "1",
                     "--pf-particles", "200", "--seed", "4", "--out", str(out)])
        assert code == 0
        comparison = json.loads((out / "comparison.json").read_text())
        assert comparison["n_particles"] == 200
        assert comparison["walker_median_loss"] > 0
        assert comparison["pf_median_loss"] > 0
        lines = (out / "pf_results.jsonl").read_text().splitlines()
        assert len(lines) == 6
        assert all('"schema":"phasewalk.pf_result.v1"' in ln for ln in lines)

    def test_risk_profile_suite(self, tmp_path):
        out = tmp_path / "prof"
        code = main(["--suite", "risk_profile", "--n-trials", "4",
                     "--n-exp", "20", "--tau-check", "1.0", "--seed", "6",
                     "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["risk_profile"]) == 50
        assert summary["n_trials"] == 200  # 50 grid points x 4 trials

    def test_heisenberg_suite(self, tmp_path):
        out = tmp_path / "heis"
        code = main(["--suite", "heisenberg_scaling", "--n-trials", "3",
                     "--n-exp", "25", "--tau-check", "1.0", "--seed", "7",
                     "--out", str(out)])
        assert code == 0
        scaling = json.loads((out / "scaling.json").read_text())
        assert len(scaling["cells"]) == 16
        cell = scaling["cells"][0]
        assert {"n_exp", "n_unwind", "bayes_risk", "median_loss",
                "van_trees_bound", "risk_over_bound"} <= set(cell)


class TestBenchFlag:
    def test_bench_updates_flag(self, tmp_path, capsys, monkeypatch):
        import phasewalk.cli as cli

        monkeypatch.setattr(
            cli, "bench_updates",
            lambda: {"n_steps_per_repeat": 10, "repeats": 1,
                     "default_backend": "python",
                     "backends": {"python": 900.0},
                     "update_optimal_only_ns": 1200.0},
        )
        code = main(["--bench-updates", "--out", str(tmp_path)])
        assert code == 0
        assert "ns/step" in capsys.readouterr().out
        bench = json.loads((tmp_path / "bench.json").read_text())
        assert bench["schema"] == "phasewalk.bench.v1"
