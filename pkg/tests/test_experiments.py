"""Tests for the experiment harness and CLI."""

import csv

import pytest

from loggrowth.cli import main
from loggrowth.errors import ConfigurationError
from loggrowth.experiments import (
    SCHEMA_VERSION,
    ExperimentConfig,
    density_context,
    run_constants,
    run_exp1,
    run_exp4,
)


def read_csv(path):
    comments, rows = [], []
    with open(path) as f:
        for line in f:
            if line.startswith("#"):
                comments.append(line)
            else:
                rows.append(line)
    header = rows[0].strip().split(",")
    data = list(csv.DictReader(rows[1:], fieldnames=header))
    return comments, header, data


class TestConfig:
    def test_scale_validation(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig("exp1", scale=0.0)
        with pytest.raises(ConfigurationError):
            ExperimentConfig("exp1", scale=1.5)

    def test_density_validation(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig("exp1", densities=("D9",))

    def test_seed_scaling(self):
        cfg = ExperimentConfig("exp2", scale=0.25)
        assert cfg.seeds(60) == 15
        assert ExperimentConfig("exp2", n_seeds=7).seeds(60) == 7


class TestConstants:
    def test_rows_and_extras(self, tmp_path):
        cfg = ExperimentConfig("constants", out_dir=tmp_path)
        result = run_constants(cfg)
        rows = {r["density"]: r for r in result["rows"]}
        assert set(rows) == {"D1", "D2", "D3", "D4"}
        assert rows["D2"]["mu0"] != "" and rows["D1"]["mu0"] == ""
        comments, header, data = read_csv(result["paths"]["constants"])
        assert header[:3] == ["experiment", "schema_version", "density"]
        assert all(r["schema_version"] == SCHEMA_VERSION for r in data)

    def test_context_cache_values(self):
        ctx = density_context("D2")
        assert ctx.Kstar == pytest.approx(-0.928, abs=5e-4)
        assert ctx.delta == 0.14


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        cfg_a = ExperimentConfig("exp1", densities=("D2",), n_seeds=2,
                                 scale=0.0025, out_dir=tmp_path / "a",
                                 eps_grid=(1e-2, 1e-3, 1e-4))
        cfg_b = ExperimentConfig("exp1", densities=("D2",), n_seeds=2,
                                 scale=0.0025, out_dir=tmp_path / "b",
                                 eps_grid=(1e-2, 1e-3, 1e-4))
        pa = run_exp1(cfg_a)["paths"]["exp1"]
        pb = run_exp1(cfg_b)["paths"]["exp1"]
        assert pa.read_bytes() == pb.read_bytes()

    def test_seed_base_changes_output(self, tmp_path):
        base = dict(densities=("D2",), n_seeds=2, scale=0.0025,
                    eps_grid=(1e-2, 1e-3))
        pa = run_exp1(ExperimentConfig("exp1", out_dir=tmp_path / "a", **base))
        pb = run_exp1(ExperimentConfig("exp1", out_dir=tmp_path / "b",
                                       seed_base=1, **base))
        assert (pa["paths"]["exp1"].read_bytes()
                != pb["paths"]["exp1"].read_bytes())


class TestExp1Schema:
    def test_columns_and_metadata(self, tmp_path):
        cfg = ExperimentConfig("exp1", densities=("D1",), n_seeds=2,
                               scale=0.0025, out_dir=tmp_path,
                               eps_grid=(1e-2, 1e-3))
        result = run_exp1(cfg)
        comments, header, data = read_csv(result["paths"]["exp1"])
        assert header == ["experiment", "schema_version", "density",
                          "estimator", "eps", "M", "seeds", "mean_var", "se"]
        assert comments and "scale" in comments[0]
        assert {r["estimator"] for r in data} == {"naive", "paired"}
        _, sh, sdata = read_csv(result["paths"]["exp1_slopes"])
        assert "slope" in sh and "fit_lo" in sh and "fit_hi" in sh


class TestExp4:
    def test_schemes_and_bands(self, tmp_path):
        result = run_exp4(ExperimentConfig("exp4", out_dir=tmp_path))
        sweep = result["sweep"]
        errs = {}
        for scheme in ("parity_shell", "symmetric_cutoff", "no_pole_info"):
            errs[scheme] = max(row[5] for row in sweep if row[2] == scheme)
        assert errs["parity_shell"] <= 1e-12
        assert 1e-4 <= errs["symmetric_cutoff"] <= 1e-1
        assert errs["no_pole_info"] >= 1.0
        newton = result["newton"]
        parity = [row[4] for row in newton if row[2] == "parity_shell"]
        assert min(parity[:6]) <= 1e-12
        naive = {row[3]: row[4] for row in newton if row[2] == "no_pole_info"}
        assert naive[12] >= 1.0

    def test_csv_written(self, tmp_path):
        result = run_exp4(ExperimentConfig("exp4", out_dir=tmp_path))
        _, ha, _ = read_csv(result["paths"]["exp4a"])
        assert ha == ["experiment", "schema_version", "scheme", "K", "b_sing",
                      "abs_err"]
        _, hb, _ = read_csv(result["paths"]["exp4b"])
        assert hb == ["experiment", "schema_version", "scheme", "iter",
                      "residual"]


class TestCli:
    def test_constants_subcommand(self, tmp_path, capsys):
        code = main(["constants", "--density", "D1", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "constants.csv").exists()
        assert "constants" in capsys.readouterr().out

    def test_unknown_density_fails_with_named_error(self, tmp_path, capsys):
        code = main(["exp1", "--density", "D7", "--out", str(tmp_path)])
        assert code == 1
        assert "D7" in capsys.readouterr().err

    def test_exp4_subcommand(self, tmp_path):
        code = main(["exp4", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "exp4a.csv").exists()
        assert (tmp_path / "exp4b.csv").exists()

    def test_flag_parsing(self, tmp_path):
        code = main(["exp1", "--density", "D1", "--seeds", "2",
                     "--scale", "0.0025", "--eps-grid", "1e-2,1e-3",
                     "--seed-base", "3", "--out", str(tmp_path)])
        assert code == 0
