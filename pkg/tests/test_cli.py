"""Tests for the command-line driver."""

import json
import os

import pandas as pd
import pytest

from skewrank.cli import (
    EXIT_DOMAIN,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_PARSE,
    RunConfig,
    build_parser,
    main,
)
from skewrank.errors import ConfigurationError

RATINGS = """voter_id,item_id,rating
alice,film-a,5
alice,film-b,3
alice,film-c,1
bob,film-a,4
bob,film-b,2
bob,film-c,2
carol,film-b,4
carol,film-c,1
"""


@pytest.fixture
def ratings_file(tmp_path):
    path = tmp_path / "ratings.csv"
    path.write_text(RATINGS, encoding="utf-8")
    return str(path)


class TestRunConfig:
    """Test cases for RunConfig."""

    def test_data_command_needs_input(self):
        with pytest.raises(ConfigurationError, match="--input"):
            RunConfig(command="rank")

    def test_aggregate_needs_output_dir(self):
        with pytest.raises(ConfigurationError, match="--output-dir"):
            RunConfig(command="aggregate", input="r.csv")

    def test_compare_rank_even(self):
        with pytest.raises(ConfigurationError, match="even"):
            RunConfig(command="rank", input="r.csv", compare_rank=3)

    def test_from_args(self):
        args = build_parser().parse_args(
            ["rank", "--input", "r.csv", "--method", "bc", "--min-support", "2", "--rank", "4"]
        )
        config = RunConfig.from_args(args)
        assert config.model.label == "bc 0 2"
        assert config.solver.rank == 4
        assert config.input == "r.csv"


class TestMain:
    """Test cases for main."""

    def test_rank(self, ratings_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["rank", "--input", ratings_file, "--output-dir", out]) == EXIT_OK
        assert "film-a" in capsys.readouterr().out
        for name in ("items.csv", "pairwise.mtx", "support.mtx", "ranking.csv", "metadata.json"):
            assert os.path.exists(os.path.join(out, name))
        for name in ("U.npy", "S.npy", "V.npy"):
            assert os.path.exists(os.path.join(out, "factors", name))
        ranking = pd.read_csv(os.path.join(out, "ranking.csv"))
        assert ranking["item_id"].iloc[0] == "film-a"

    def test_rank_demo(self, tmp_path):
        out = str(tmp_path / "demo")
        assert main(["rank", "--demo", "--min-user-ratings", "2", "--output-dir", out]) == EXIT_OK
        with open(os.path.join(out, "metadata.json"), encoding="utf-8") as f:
            metadata = json.load(f)
        assert metadata["model_code"] == "am 2 0"
        assert metadata["num_voters"] == 8

    def test_outputs_are_reproducible(self, ratings_file, tmp_path):
        first, second = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["rank", "--input", ratings_file, "--output-dir", first]) == EXIT_OK
        assert main(["rank", "--input", ratings_file, "--output-dir", second]) == EXIT_OK
        for name in ("ranking.csv", "pairwise.mtx", "support.mtx", "items.csv"):
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                assert a.read() == b.read(), name

    def test_aggregate_then_rank_then_analyze(self, ratings_file, tmp_path, capsys):
        pairwise_dir, rank_dir = str(tmp_path / "agg"), str(tmp_path / "rank")
        assert main(["aggregate", "--input", ratings_file, "--output-dir", pairwise_dir]) == EXIT_OK
        assert main(["rank", "--pairwise", pairwise_dir, "--output-dir", rank_dir]) == EXIT_OK
        capsys.readouterr()
        assert main(["analyze", "--input", rank_dir]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["matches_stored"] is True
        assert report["model_code"] == "am 0 0"

    def test_metadata_missing_method(self, ratings_file, tmp_path):
        pairwise_dir, rank_dir = str(tmp_path / "agg"), str(tmp_path / "rank")
        assert main(["aggregate", "--input", ratings_file, "--output-dir", pairwise_dir]) == EXIT_OK
        metadata_path = os.path.join(pairwise_dir, "metadata.json")
        with open(metadata_path, encoding="utf-8") as f:
            metadata = json.load(f)
        del metadata["method"]
        with open(metadata_path, "w", encoding="utf-8") as f:
            json.dump(metadata, f)
        assert main(["rank", "--pairwise", pairwise_dir, "--output-dir", rank_dir]) == EXIT_PARSE

    def test_malformed_first_record(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("u1,a,abc\nu1,b,3\n", encoding="utf-8")
        assert main(["rank", "--input", str(path)]) == EXIT_PARSE

    def test_malformed_input(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("u1,a,3\nu1,b,lots\n", encoding="utf-8")
        assert main(["rank", "--input", str(path)]) == EXIT_PARSE

    def test_missing_input(self, tmp_path):
        assert main(["rank", "--input", str(tmp_path / "absent.csv")]) == EXIT_PARSE

    def test_geometric_mean_zero_rating(self, tmp_path):
        path = tmp_path / "zero.csv"
        path.write_text("u1,a,3\nu1,b,0\n", encoding="utf-8")
        out = str(tmp_path / "out")
        assert main(["aggregate", "--input", str(path), "--output-dir", out, "--method", "gm"]) == EXIT_DOMAIN

    @pytest.mark.filterwarnings("ignore::skewrank.errors.EmptySampleSetWarning")
    def test_min_support_too_large(self, ratings_file):
        assert main(["rank", "--input", ratings_file, "--min-support", "99"]) == EXIT_DOMAIN

    def test_odd_rank(self, ratings_file):
        assert main(["rank", "--input", ratings_file, "--rank", "3"]) == EXIT_DOMAIN

    def test_strict_convergence(self, ratings_file):
        argv = ["rank", "--input", ratings_file, "--max-iters", "0"]
        assert main(argv) == EXIT_OK
        assert main(argv + ["--strict-convergence"]) == EXIT_NOT_CONVERGED

    def test_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["rank", "--method", "xx", "--demo"])
        assert excinfo.value.code == 2

    def test_synth_recovery_tables(self, tmp_path):
        out = str(tmp_path / "rec")
        argv = ["synth-recovery", "--n", "8", "--multipliers", "1 50", "--trials", "2", "--output-dir", out]
        assert main(argv) == EXIT_OK
        summary = pd.read_csv(os.path.join(out, "recovery_summary.csv"))
        assert summary["multiplier"].tolist() == [1.0, 50.0]
        assert len(pd.read_csv(os.path.join(out, "recovery_trials.csv"))) == 4

    def test_synth_irt_tables(self, tmp_path):
        out = str(tmp_path / "irt")
        argv = [
            "synth-irt", "--users", "40", "--items", "6", "--ratings-per-user", "3",
            "--noise-eps", "0 0.5", "--trials", "2", "--output-dir", out,
        ]
        assert main(argv) == EXIT_OK
        summary = pd.read_csv(os.path.join(out, "irt_summary.csv"))
        assert summary["noise_eps"].tolist() == [0.0, 0.5]
