from __future__ import annotations

import csv
from pathlib import Path

import pytest
import yaml

from confopt.cli import main

MODEL = {
    "services": {
        "web": {"base_ms": 40.0, "cpu_demand_mc": 30.0, "mem_working_set_mi": 256.0},
    },
    "chain": ["web"],
    "p99_factor": 3.0,
    "mem_penalty": 1.5,
}


def write_yaml(path, document):
    path.write_text(yaml.safe_dump(document, sort_keys=False))
    return path


def config_document(**overrides):
    document = {
        "nbOfIterations": 2,
        "nbOfSamplesPerIteration": 6,
        "slas": [
            {
                "name": "storefront",
                "slos": {"99th": 1000.0},
                "nbOfTenants": 10,
                "parameters": [
                    {
                        "name": "webCpu",
                        "searchspace": {"min": 500, "max": 1125, "granularity": 125},
                        "suffix": "m",
                    },
                    {
                        "name": "webMemory",
                        "searchspace": {"min": 256, "max": 1024, "granularity": 256},
                        "suffix": "Mi",
                    },
                ],
            }
        ],
        "optimizer": "bayesian-ei",
        "utilFunc": "slo-cost",
        "outputDir": "./results",
        "seed": 3,
        "backend": {"kind": "synthetic", "model": "model.yaml"},
        "screening": {"r": 3, "p": 4},
    }
    document.update(overrides)
    return document


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.delenv("CONFOPT_OUT", raising=False)
    write_yaml(tmp_path / "model.yaml", MODEL)
    write_yaml(tmp_path / "config.yaml", config_document())
    return tmp_path


def run(monkeypatch, out, argv):
    monkeypatch.setenv("CONFOPT_OUT", str(out))
    return main(argv)


class TestExitCodes:
    def test_missing_config_file(self, workdir, monkeypatch, capsys):
        code = run(monkeypatch, workdir / "o", ["optimize", "--config", "nope.yaml"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_optimizer_in_config(self, workdir, monkeypatch, capsys):
        write_yaml(
            workdir / "bad.yaml", config_document(optimizer="hillclimb")
        )
        code = run(
            monkeypatch, workdir / "o", ["optimize", "--config", str(workdir / "bad.yaml")]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "hillclimb" in err and "bayesian-ei" in err

    def test_unknown_subcommand_is_usage_error(self, workdir, monkeypatch):
        assert run(monkeypatch, workdir / "o", ["tune"]) == 1

    def test_no_arguments_is_usage_error(self, workdir, monkeypatch):
        assert run(monkeypatch, workdir / "o", []) == 1

    def test_help_exits_zero(self, workdir, monkeypatch):
        assert run(monkeypatch, workdir / "o", ["--help"]) == 0

    def test_runtime_failure_is_two(self, workdir, monkeypatch, capsys):
        document = config_document(
            backend={"kind": "external", "command": ["./no-such-runner"]}
        )
        write_yaml(workdir / "ext.yaml", document)
        code = run(
            monkeypatch, workdir / "o", ["optimize", "--config", str(workdir / "ext.yaml")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_compare_rejects_unknown_optimizer_name(self, workdir, monkeypatch, capsys):
        out = workdir / "data"
        assert run(
            monkeypatch, out, ["exhaustive", "--config", str(workdir / "config.yaml")]
        ) == 0
        code = run(
            monkeypatch,
            workdir / "cmp",
            [
                "compare",
                "--dataset",
                str(out / "dataset.csv"),
                "--optimizers",
                "random,annealing",
                "--runs",
                "2",
                "--budget",
                "4",
            ],
        )
        assert code == 1
        assert "annealing" in capsys.readouterr().err


class TestScreen:
    def test_outputs(self, workdir, monkeypatch, capsys):
        out = workdir / "screen-out"
        code = run(
            monkeypatch, out, ["screen", "--config", str(workdir / "config.yaml")]
        )
        assert code == 0
        assert (out / "screening_report.csv").exists()
        assert (out / "reduced-config.yaml").exists()
        assert "reduced space:" in capsys.readouterr().out
        with open(out / "screening_report.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "parameter",
            "mu",
            "mu_star",
            "sigma",
            "old_min",
            "old_max",
            "new_min",
            "new_max",
            "rho",
        ]
        assert len(rows) == 3

    def test_reduced_config_parses_and_shrinks(self, workdir, monkeypatch):
        out = workdir / "screen-out"
        run(monkeypatch, out, ["screen", "--config", str(workdir / "config.yaml")])
        from confopt.config import parse_config

        monkeypatch.delenv("CONFOPT_OUT")
        reduced = parse_config(out / "reduced-config.yaml")
        assert reduced.space.size <= 24
        assert reduced.cost_reference is not None

    def test_seed_flag_changes_plan(self, workdir, monkeypatch):
        out_a = workdir / "a"
        out_b = workdir / "b"
        run(monkeypatch, out_a, ["screen", "--config", str(workdir / "config.yaml"), "--seed", "1"])
        run(monkeypatch, out_b, ["screen", "--config", str(workdir / "config.yaml"), "--seed", "3"])
        a = (out_a / "screening_report.csv").read_bytes()
        b = (out_b / "screening_report.csv").read_bytes()
        assert a != b


class TestOptimize:
    def test_outputs_and_determinism(self, workdir, monkeypatch, capsys):
        out_a = workdir / "a"
        out_b = workdir / "b"
        config = str(workdir / "config.yaml")
        assert run(monkeypatch, out_a, ["optimize", "--config", config]) == 0
        assert run(monkeypatch, out_b, ["optimize", "--config", config]) == 0
        for out in (out_a, out_b):
            assert (out / "trace.csv").exists()
            assert (out / "summary.txt").exists()
        assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()
        assert (out_a / "summary.txt").read_bytes() == (
            out_b / "summary.txt"
        ).read_bytes()
        stdout = capsys.readouterr().out
        assert "best_utility" in stdout

    def test_trace_has_budget_rows(self, workdir, monkeypatch):
        out = workdir / "o"
        run(monkeypatch, out, ["optimize", "--config", str(workdir / "config.yaml")])
        with open(out / "trace.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 12  # 2 iterations x 6 samples
        assert "best_so_far" in rows[0]

    def test_seed_override_changes_proposals(self, workdir, monkeypatch):
        config = str(workdir / "config.yaml")
        out_a, out_b = workdir / "a", workdir / "b"
        run(monkeypatch, out_a, ["optimize", "--config", config, "--seed", "11"])
        run(monkeypatch, out_b, ["optimize", "--config", config, "--seed", "12"])
        assert (out_a / "trace.csv").read_bytes() != (out_b / "trace.csv").read_bytes()


class TestExhaustiveAndReport:
    def test_dataset_then_report(self, workdir, monkeypatch):
        data = workdir / "data"
        config = str(workdir / "config.yaml")
        assert run(monkeypatch, data, ["exhaustive", "--config", config]) == 0
        assert (data / "dataset.csv").exists()
        assert (data / "summary.txt").exists()
        with open(data / "dataset.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "webCpu",
            "webMemory",
            "p99_latency_ms",
            "throughput_rps",
            "utility",
            "feasible",
            "failed",
        ]
        assert len(rows) == 25

        rep = workdir / "rep"
        code = run(
            monkeypatch,
            rep,
            ["report", "--in", str(data / "dataset.csv")],
        )
        assert code == 0
        assert (rep / "dataset.csv").exists()
        assert (rep / "slo_cdf.csv").exists()
        assert (rep / "summary.txt").exists()
        with open(rep / "slo_cdf.csv", newline="") as fh:
            cdf = list(csv.DictReader(fh))
        assert float(cdf[-1]["cumulative_fraction"]) == 1.0

    def test_exhaustive_reruns_identical(self, workdir, monkeypatch):
        config = str(workdir / "config.yaml")
        out_a, out_b = workdir / "a", workdir / "b"
        run(monkeypatch, out_a, ["exhaustive", "--config", config])
        run(monkeypatch, out_b, ["exhaustive", "--config", config])
        assert (out_a / "dataset.csv").read_bytes() == (
            out_b / "dataset.csv"
        ).read_bytes()


class TestCompare:
    @pytest.fixture()
    def dataset(self, workdir, monkeypatch):
        data = workdir / "data"
        run(monkeypatch, data, ["exhaustive", "--config", str(workdir / "config.yaml")])
        return data / "dataset.csv"

    def test_outputs(self, workdir, monkeypatch, dataset):
        out = workdir / "cmp"
        code = run(
            monkeypatch,
            out,
            [
                "compare",
                "--dataset",
                str(dataset),
                "--optimizers",
                "random,bayesian-ei",
                "--runs",
                "4",
                "--budget",
                "6",
                "--seed",
                "0",
            ],
        )
        assert code == 0
        assert (out / "compare_random.csv").exists()
        assert (out / "compare_bayesian-ei.csv").exists()
        assert (out / "summary.txt").exists()
        with open(out / "compare_random.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "fraction_found_optimal", "distance_q99"]
        assert len(rows) == 7

    def test_workers_do_not_change_bytes(self, workdir, monkeypatch, dataset):
        args = [
            "compare",
            "--dataset",
            str(dataset),
            "--optimizers",
            "random",
            "--runs",
            "6",
            "--budget",
            "5",
        ]
        out_a, out_b = workdir / "serial", workdir / "parallel"
        assert run(monkeypatch, out_a, args + ["--workers", "1"]) == 0
        assert run(monkeypatch, out_b, args + ["--workers", "3"]) == 0
        assert (out_a / "compare_random.csv").read_bytes() == (
            out_b / "compare_random.csv"
        ).read_bytes()

    def test_omitting_optimizers_runs_all(self, workdir, monkeypatch, dataset):
        out = workdir / "cmp_all"
        code = run(
            monkeypatch,
            out,
            ["compare", "--dataset", str(dataset), "--runs", "2", "--budget", "4"],
        )
        assert code == 0
        csvs = sorted(p.name for p in out.glob("compare_*.csv"))
        assert csvs == [
            "compare_bayesian-ei.csv",
            "compare_bestconfig.csv",
            "compare_exhaustive.csv",
            "compare_random.csv",
            "compare_randominc.csv",
        ]


class TestScreenVsBo:
    def test_outputs(self, workdir, monkeypatch):
        out = workdir / "svb"
        code = run(
            monkeypatch,
            out,
            [
                "screen-vs-bo",
                "--config",
                str(workdir / "config.yaml"),
                "--budget",
                "15",
                "--repetitions",
                "2",
                "--seed",
                "0",
            ],
        )
        assert code == 0
        assert (out / "screen_vs_bo.csv").exists()
        assert (out / "summary.txt").exists()
        with open(out / "screen_vs_bo.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert rows[0]["repetition"] == "0"
        assert rows[0]["screening_evals"] == "9"  # r=3 trajectories x (2+1)
