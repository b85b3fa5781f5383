"""Tests for the command-line front end."""

import json

import numpy as np
import pytest

from adadetect.cli import RunConfig, main, read_csv_matrix
from adadetect.exceptions import InvalidInputError


@pytest.fixture
def csv_pair(tmp_path):
    rng = np.random.default_rng(0)
    nts = tmp_path / "nts.csv"
    test = tmp_path / "test.csv"
    np.savetxt(nts, rng.normal(size=(300, 3)), delimiter=",")
    rows = np.vstack([rng.normal(size=(45, 3)), rng.normal(size=(5, 3)) + 2.5])
    np.savetxt(test, rows, delimiter=",")
    return nts, test


class TestCsvReader:
    def test_plain_matrix(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,4.5e-1\n")
        mat = read_csv_matrix(path)
        assert mat.tolist() == [[1.0, 2.0], [3.0, 0.45]]

    def test_header_skipped_when_flagged(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n")
        assert read_csv_matrix(path, header=True).tolist() == [[1.0, 2.0]]

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(InvalidInputError, match="line 2"):
            read_csv_matrix(path)

    def test_non_numeric_names_column(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(InvalidInputError, match="line 2, column 2"):
            read_csv_matrix(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("")
        with pytest.raises(InvalidInputError, match="no data rows"):
            read_csv_matrix(path)


class TestDetect:
    def test_smoke_run_emits_files(self, csv_pair, tmp_path, capsys):
        nts, test = csv_pair
        out = tmp_path / "out"
        code = main([
            "detect", "--nts", str(nts), "--test", str(test),
            "--alpha", "0.2", "--scorer", "logistic", "--ell", "50",
            "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["schema_version"] == 1
        assert report["config"]["subcommand"] == "detect"
        assert report["result"]["k_hat"] == len(report["result"]["rejections"])
        lines = (out / "rejections.csv").read_text().splitlines()
        assert len(lines) == report["result"]["k_hat"]
        assert all(1 <= int(x) <= 50 for x in lines)

    def test_full_scale_tree_smoke(self, tmp_path):
        # 5000-row null sample, 1000-row test sample, bagged-tree scorer
        rng = np.random.default_rng(42)
        nts = tmp_path / "nts.csv"
        test = tmp_path / "test.csv"
        np.savetxt(nts, rng.normal(size=(5000, 3)), delimiter=",")
        rows = np.vstack([rng.normal(size=(900, 3)),
                          rng.normal(size=(100, 3)) + 2.0])
        np.savetxt(test, rows, delimiter=",")
        out = tmp_path / "out"
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--alpha", "0.1", "--scorer", "tree",
                     "--split", "ell-equals-m", "--seed", "1",
                     "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "rejections.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["options"]["k"] == 4000

    def test_empty_test_file_exits_2(self, csv_pair, tmp_path, capsys):
        nts, _ = csv_pair
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        code = main(["detect", "--nts", str(nts), "--test", str(empty),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "no data rows" in capsys.readouterr().err

    def test_dimension_mismatch_exits_2(self, csv_pair, tmp_path, capsys):
        nts, _ = csv_pair
        narrow = tmp_path / "narrow.csv"
        narrow.write_text("1,2\n3,4\n")
        code = main(["detect", "--nts", str(nts), "--test", str(narrow),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "dimension mismatch" in capsys.readouterr().err

    def test_same_seed_byte_identical_outputs(self, csv_pair, tmp_path):
        nts, test = csv_pair
        args = ["detect", "--nts", str(nts), "--test", str(test),
                "--alpha", "0.2", "--scorer", "tree",
                "--scorer-params", '{"n_trees": 15}', "--ell", "50",
                "--seed", "7"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "rejections.csv").read_bytes() == \
               (out2 / "rejections.csv").read_bytes()
        # full result payloads agree; only the echoed --out path may differ
        r1 = json.loads((out1 / "report.json").read_text())
        r2 = json.loads((out2 / "report.json").read_text())
        assert r1["result"] == r2["result"]

    def test_storey_flag_switches_variant(self, csv_pair, tmp_path):
        nts, test = csv_pair
        out = tmp_path / "out"
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--alpha", "0.2", "--scorer", "chi2", "--ell", "50",
                     "--storey-K", "25", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["result"]["config"]["variant"] == "storey-adadetect"
        assert report["result"]["pi0"]["method"] == "storey"

    def test_quantile_flag_with_and_without_value(self, csv_pair, tmp_path):
        nts, test = csv_pair
        out = tmp_path / "out"
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--alpha", "0.2", "--scorer", "chi2", "--ell", "50",
                     "--quantile-k0", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["result"]["config"]["variant"] == "quantile-adadetect"
        assert report["result"]["config"]["k0"] == 25  # default ceil(m/2)
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--alpha", "0.2", "--scorer", "chi2", "--ell", "50",
                     "--quantile-k0", "7", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["result"]["config"]["k0"] == 7

    def test_unknown_scorer_exits_2(self, csv_pair, tmp_path):
        nts, test = csv_pair
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--scorer", "svm", "--out", str(tmp_path / "o")])
        assert code == 2

    def test_malformed_scorer_params_exit_2(self, csv_pair, tmp_path, capsys):
        nts, test = csv_pair
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--scorer", "logistic", "--scorer-params", "{oops",
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "invalid JSON" in capsys.readouterr().err

    def test_conflicting_adaptive_flags_exit_2(self, csv_pair, tmp_path, capsys):
        nts, test = csv_pair
        code = main(["detect", "--nts", str(nts), "--test", str(test),
                     "--scorer", "chi2", "--ell", "50", "--storey-K", "25",
                     "--quantile-k0", "5", "--out", str(tmp_path / "o")])
        assert code == 2
        assert "not both" in capsys.readouterr().err


class TestCv:
    def test_grid_selection(self, csv_pair, tmp_path):
        nts, test = csv_pair
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps([
            {"scorer": "chi2"},
            {"scorer": "logistic", "params": {"max_iter": 300}},
        ]))
        out = tmp_path / "out"
        code = main(["cv", "--nts", str(nts), "--test", str(test),
                     "--alpha", "0.2", "--cv-grid", str(grid), "--k", "250",
                     "--s", "150", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["result"]["config"]["variant"] == "adadetect-cv"
        assert report["result"]["chosen_index"] in (0, 1)
        assert len(report["result"]["surrogate_rejections"]) == 2

    def test_bad_grid_json_exits_2(self, csv_pair, tmp_path, capsys):
        nts, test = csv_pair
        grid = tmp_path / "grid.json"
        grid.write_text("{not json")
        code = main(["cv", "--nts", str(nts), "--test", str(test),
                     "--cv-grid", str(grid), "--out", str(tmp_path / "o")])
        assert code == 2


class TestSimulate:
    def test_sweep_row_count(self, tmp_path):
        out = tmp_path / "sim"
        code = main([
            "simulate", "--setting", "gaussian-sparse", "--d", "10",
            "--d", "50", "--n", "120", "--m", "30", "--m1", "3",
            "--alpha", "0.2", "--method", "adadetect",
            "--method", "storey-adadetect", "--method", "marginal-storey-bh",
            "--scorer", "linear", "--replicates", "5", "--seed", "1",
            "--out", str(out),
        ])
        assert code == 0
        lines = (out / "curves.csv").read_text().splitlines()
        assert lines[0] == "d,method,fdr,fdr_se,tdr,tdr_se"
        assert len(lines) == 1 + 6  # 2 sweep values x 3 methods
        payload = json.loads((out / "mc_report.json").read_text())
        assert {row["method"] for row in payload["curves"]} == {
            "adadetect", "storey-adadetect", "marginal-storey-bh"}

    def test_rho_sweep_headers(self, tmp_path):
        out = tmp_path / "sim"
        code = main([
            "simulate", "--setting", "equicorrelated", "--d", "1",
            "--rho", "0.0", "--rho", "0.9", "--n", "100", "--m", "20",
            "--m1", "2", "--alpha", "0.2", "--method", "storey-adadetect",
            "--method", "marginal-storey-bh", "--scorer", "linear",
            "--k", "0", "--replicates", "5", "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        lines = (out / "curves.csv").read_text().splitlines()
        assert lines[0].startswith("rho,method")
        assert len(lines) == 1 + 4

    def test_beta_setting_with_oracle_and_quantile_methods(self, tmp_path):
        out = tmp_path / "sim"
        code = main([
            "simulate", "--setting", "beta", "--d", "3", "--n", "120",
            "--m", "40", "--m1", "8", "--alpha", "0.25",
            "--method", "adadetect", "--method", "quantile-adadetect",
            "--scorer", "oracle", "--k", "80", "--replicates", "4",
            "--seed", "2", "--out", str(out),
        ])
        assert code == 0
        payload = json.loads((out / "mc_report.json").read_text())
        assert len(payload["curves"]) == 2

    def test_single_replicate_warns_and_zero_se(self, tmp_path, capsys):
        out = tmp_path / "sim"
        code = main([
            "simulate", "--setting", "gaussian-sparse", "--d", "4",
            "--n", "60", "--m", "15", "--m1", "2", "--method", "adadetect",
            "--scorer", "linear", "--replicates", "1", "--out", str(out),
        ])
        assert code == 0
        assert "standard errors" in capsys.readouterr().err
        payload = json.loads((out / "mc_report.json").read_text())
        assert payload["curves"][0]["fdr_se"] == 0.0

    def test_double_sweep_rejected(self, tmp_path):
        code = main([
            "simulate", "--setting", "equicorrelated", "--d", "1", "--d", "2",
            "--rho", "0.1", "--rho", "0.2", "--n", "50", "--m", "10",
            "--m1", "1", "--method", "adadetect", "--scorer", "linear",
            "--replicates", "2", "--out", "unused",
        ])
        assert code == 2


class TestVerify:
    def test_storey_default(self, tmp_path):
        out = tmp_path / "v"
        code = main(["verify", "--m", "10", "--ell", "8", "--m0", "5",
                     "--replicates", "2000", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "bound_report.json").read_text())
        assert payload["result"]["estimate"] > 0
        assert payload["result"]["se"] > 0
        assert payload["result"]["bound_holds"]

    def test_inadmissible_K_exits_2(self, tmp_path, capsys):
        code = main(["verify", "--m", "10", "--ell", "8", "--m0", "5",
                     "--K", "1", "--replicates", "100",
                     "--out", str(tmp_path / "v")])
        assert code == 2
        assert "admissible range {2..8}" in capsys.readouterr().err

    def test_quantile_low_k0_path(self, tmp_path):
        out = tmp_path / "v"
        code = main(["verify", "--m", "10", "--ell", "8", "--m0", "5",
                     "--estimator", "quantile", "--k0", "1",
                     "--replicates", "2000", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "bound_report.json").read_text())
        assert payload["result"]["estimate"] <= 1.0


def test_internal_invariant_maps_to_exit_3(csv_pair, tmp_path, monkeypatch, capsys):
    from adadetect import cli as cli_mod
    from adadetect.exceptions import InternalInvariantError

    def boom(*args, **kwargs):
        raise InternalInvariantError("synthetic self-check failure")

    monkeypatch.setattr(cli_mod, "run_adadetect", boom)
    nts, test = csv_pair
    code = main(["detect", "--nts", str(nts), "--test", str(test),
                 "--out", str(tmp_path / "o")])
    assert code == 3
    assert "internal error" in capsys.readouterr().err


class TestRunConfig:
    def test_json_round_trip(self):
        cfg = RunConfig("detect", {
            "nts": "a.csv", "alpha": 0.1, "k": None, "methods": ["x", "y"],
            "nested": {"p": 2, "q": [1.5, "z"]},
        })
        wire = json.dumps(cfg.to_dict())
        back = RunConfig.from_dict(json.loads(wire))
        assert back == cfg

    def test_numpy_scalars_normalized(self):
        cfg = RunConfig("verify", {"m": np.int64(5), "se": np.float64(0.25)})
        back = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back.options == {"m": 5, "se": 0.25}
        assert back == RunConfig("verify", {"m": 5, "se": 0.25})
