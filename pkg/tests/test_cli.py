import json

import pytest

from hypertime import cli
from hypertime.config import ConfigError, default_benchmark, default_benchmark_text, loads, parse_kappa

SMALL = """
[data]
scenario = "benchmark"
n_rows = 800

[learner]
family = "ridge"

[[space]]
name = "alpha"
kind = "continuous"
lower = 1e-3
upper = 1e5
log_scale = true

[optimizer]
budget = 15
kappa = ["1%", "0%"]

[experiment]
seeds = [0, 1]

[[methods]]
variant = "hypertime"

[[methods]]
variant = "cfo_avg"
name = "cfo_avg_shuffled"
chronology = "shuffled"
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


class TestKappa:
    def test_percent_strings(self):
        assert parse_kappa(["1%", "0%"]) == (0.01, 0.0)
        assert parse_kappa("5%,2.5%") == (0.05, 0.025)

    def test_fractions(self):
        assert parse_kappa([0.01, 0]) == (0.01, 0.0)

    @pytest.mark.parametrize("bad", [["x"], [], ["-1%"], [True]])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            parse_kappa(bad)


class TestConfigFile:
    def test_shipped_benchmark(self):
        cf = default_benchmark()
        labels = [c.label for c in cf.method_configs()]
        assert labels[:5] == ["hypertime", "cfo_avg", "cfo_worst", "hypertime_reverse", "cfo_weighted(0.01)"]
        assert cf.base.optimizer.budget == 150 and cf.base.optimizer.kappa == (0.01, 0.0)
        assert cf.base.folds.k == 4 and cf.base.seeds == (0, 1, 2, 3, 4)
        shuffled = [c for c in cf.method_configs() if c.label.endswith("shuffled")]
        assert {c.folds.chronology for c in shuffled} == {"shuffled"}

    def test_small(self):
        cf = loads(SMALL)
        assert cf.base.data.scenario.n_rows == 800
        assert cf.base.space.names == ["alpha"]
        assert cf.base.seeds == (0, 1)

    @pytest.mark.parametrize("mutate", [
        lambda t: t.replace('family = "ridge"', 'family = "svm"'),
        lambda t: t.replace('[optimizer]', '[optimizer]\nbogus = 1'),
        lambda t: t.replace('scenario = "benchmark"', 'scenario = "benchmark"\ncsv = "x.csv"'),
        lambda t: t.replace('variant = "cfo_avg"', 'variant = "hyperband"'),
        lambda t: t.replace('budget = 15', 'budget = 0'),
        lambda t: t.replace('name = "alpha"', 'name = "gamma"'),
        lambda t: t + "\n[extra]\n",
        lambda t: t.replace("[learner]", "[learner"),
        lambda t: t.replace('kind = "continuous"', 'kind = "real"'),
    ])
    def test_invalid(self, mutate):
        with pytest.raises(ConfigError):
            loads(mutate(SMALL))

    def test_relative_paths(self, tmp_path):
        text = SMALL.replace('scenario = "benchmark"\nn_rows = 800', 'csv = "d.csv"')
        cf = loads(text, tmp_path)
        assert cf.base.data.path == str(tmp_path / "d.csv")

    def test_scenario_file(self, tmp_path):
        from hypertime.drift import benchmark_scenario
        benchmark_scenario(n_rows=500).save(tmp_path / "s.json")
        cf = loads(SMALL.replace('scenario = "benchmark"\nn_rows = 800', 'scenario = "s.json"'), tmp_path)
        assert cf.base.data.scenario.n_rows == 500


class TestCli:
    def test_gen_data(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        assert cli.main(["gen-data", "--n-rows", "200", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "timestamp,x0,x1,x2,label" and len(lines) == 201
        assert json.loads(out.with_suffix(".scenario.json").read_text())["n_rows"] == 200

    def test_tune(self, small_config, tmp_path, capsys):
        out = tmp_path / "run"
        code = cli.main(["tune", "--config", str(small_config), "--variant", "cfo_weighted(0.05)",
                         "--seed", "3", "--budget", "10", "--k", "3", "--out", str(out)])
        assert code == 0
        assert "cfo_weighted(0.05)" in capsys.readouterr().out
        report = json.loads((out / "report.json").read_text())
        (method,) = report["methods"]
        assert [s["seed"] for s in method["seeds"]] == [3]
        assert method["seeds"][0]["n_evaluations"] == 10
        assert (out / "traces" / "cfo_weighted_0.05_seed3.jsonl").exists()

    def test_bench_and_report(self, small_config, tmp_path, capsys):
        out = tmp_path / "bench"
        assert cli.main(["bench", "--config", str(small_config), "--out", str(out)]) == 0
        summary = (out / "summary.csv").read_text().splitlines()
        assert [l.split(",")[0] for l in summary[1:]] == ["hypertime", "cfo_avg_shuffled"]
        capsys.readouterr()
        again = tmp_path / "again"
        assert cli.main(["report", str(out), "--out", str(again)]) == 0
        printed = capsys.readouterr().out
        assert "hypertime_seed0: 15 evaluations" in printed
        assert (again / "summary.csv").read_text() == (out / "summary.csv").read_text()

    def test_bench_theorem(self, small_config, tmp_path, capsys):
        out = tmp_path / "b"
        code = cli.main(["bench", "--config", str(small_config), "--variant", "hypertime", "--seeds", "0",
                         "--theorem", "--grid-size", "10", "--draws", "20", "--out", str(out)])
        assert code == 0
        header, row = (out / "bound.csv").read_text().splitlines()
        assert header.startswith("k_star,beta,epsilon,n_val")
        assert len(row.split(",")) == len(header.split(","))

    def test_overrides(self, small_config, tmp_path):
        out = tmp_path / "o"
        code = cli.main(["tune", "--config", str(small_config), "--seeds", "0", "--strategy", "holdout",
                         "--kappa", "5%,0%", "--select", "posthoc", "--final-fit", "train_only",
                         "--out", str(out)])
        assert code == 0

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["tune", "--config", str(tmp_path / "missing.toml")]) == 1
        assert cli.main(["tune", "--kappa", "abc"]) == 1
        assert cli.main(["bench", "--variant", "nope"]) == 1
        assert cli.main(["frobnicate"]) == 1
        assert cli.main(["tune", "--budget", "0"]) == 1

    def test_runtime_error_exit_code(self, small_config, capsys):
        code = cli.main(["tune", "--config", str(small_config), "--k", "500", "--seeds", "0"])
        assert code == 2
        assert "stage folds" in capsys.readouterr().err


def test_shipped_config_parses_as_toml():
    assert "[[methods]]" in default_benchmark_text()
