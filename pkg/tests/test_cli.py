import json
import shutil

import pytest
from click.testing import CliRunner

from cipolicy.cli import main

SUBCOMMANDS = [
    "validate", "stats", "incomplete", "bloat", "vagueness", "diff",
    "aggregate", "score-words", "score-spans", "screen", "readability",
    "replay", "serve", "export",
]


@pytest.fixture()
def runner():
    return CliRunner()


class TestHelp:
    def test_group_help(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for name in SUBCOMMANDS:
            assert name in result.output

    @pytest.mark.parametrize("name", SUBCOMMANDS)
    def test_subcommand_help(self, runner, name):
        result = runner.invoke(main, [name, "--help"])
        assert result.exit_code == 0
        assert "Usage" in result.output


class TestValidate:
    def test_fixture_document(self, runner, fixtures_dir):
        result = runner.invoke(main, ["validate", str(fixtures_dir / "fb_prev.json")])
        assert result.exit_code == 0
        assert result.output.strip() == "OK, 42 flows"

    def test_missing_file_exits_one(self, runner, tmp_path):
        result = runner.invoke(main, ["validate", str(tmp_path / "nope.json")])
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_malformed_json_exits_one(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        result = runner.invoke(main, ["validate", str(bad)])
        assert result.exit_code == 1

    def test_unknown_subcommand_exits_two(self, runner):
        result = runner.invoke(main, ["frobnicate"])
        assert result.exit_code == 2


class TestStats:
    def test_writes_reports(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "reports"
        result = runner.invoke(main, [
            "stats", str(fixtures_dir / "fb_prev.json"), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "analysis.json").exists()
        assert (out / "frequency.csv").exists()
        assert (out / "unique_counts.png").exists()
        assert "42 flows" in result.output

    def test_no_figures(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "reports"
        result = runner.invoke(main, [
            "stats", str(fixtures_dir / "fb_prev.json"), "--out", str(out),
            "--no-figures", "--format", "json",
        ])
        assert result.exit_code == 0
        assert not list(out.glob("*.png"))
        assert not list(out.glob("*.csv"))
        assert (out / "analysis.json").exists()

    def test_deterministic_outputs(self, runner, fixtures_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, [
                "stats", str(fixtures_dir / "fb_prev.json"), "--out", str(out),
            ])
            assert result.exit_code == 0
            outs.append(out)
        for path_a in sorted(outs[0].iterdir()):
            path_b = outs[1] / path_a.name
            assert path_a.read_bytes() == path_b.read_bytes(), path_a.name


class TestIncomplete:
    def test_fixture_percent(self, runner, fixtures_dir):
        result = runner.invoke(main, ["incomplete", str(fixtures_dir / "fb_prev.json")])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["total_flows"] == 42
        assert obj["incomplete_flows"] == 19
        assert obj["percent_overall"] == 45.24


class TestBloat:
    def test_fixture_histograms(self, runner, fixtures_dir):
        result = runner.invoke(main, ["bloat", str(fixtures_dir / "fb_prev.json")])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["sender"] == {"2": 3}
        assert obj["recipient"] == {"10": 1}


class TestVagueness:
    def test_modality_only_document(self, runner, tmp_path):
        doc = {
            "policy_id": "p", "version_label": "v",
            "flows": [{"id": "f1", "text": "We may share data.",
                       "source_ref": None, "spans": []}],
        }
        path = tmp_path / "doc.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(main, ["vagueness", str(path)])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert obj["percent_by_category"]["modality"] == 100.0
        assert obj["percent_by_category"]["conditionality"] == 0.0
        assert obj["flows"]["f1"][0]["term"] == "may"


class TestDiff:
    def test_self_diff_empty(self, runner, fixtures_dir, tmp_path):
        path = str(fixtures_dir / "fb_prev.json")
        out = tmp_path / "reports"
        result = runner.invoke(main, ["diff", path, path, "--out", str(out),
                                      "--no-figures"])
        assert result.exit_code == 0
        assert "added=0 removed=0" in result.output
        obj = json.loads((out / "diff.json").read_text())
        for kind in obj["by_kind"].values():
            assert kind["added"] == [] and kind["removed"] == []

    def test_threshold_override(self, runner, fixtures_dir, tmp_path):
        path = str(fixtures_dir / "fb_prev.json")
        result = runner.invoke(main, [
            "diff", path, path, "--thresholds", "sender=70,attribute=65,tp=55",
            "--out", str(tmp_path / "r"), "--no-figures", "--format", "json",
        ])
        assert result.exit_code == 0

    def test_bad_threshold_exits_one(self, runner, fixtures_dir, tmp_path):
        path = str(fixtures_dir / "fb_prev.json")
        result = runner.invoke(main, [
            "diff", path, path, "--thresholds", "owner=50",
            "--out", str(tmp_path / "r"),
        ])
        assert result.exit_code == 1
        assert "unknown parameter kind" in result.output


class TestBundleCommands:
    def test_aggregate(self, runner, fixtures_dir):
        result = runner.invoke(main, [
            "aggregate", str(fixtures_dir / "experiment"), "w01",
        ])
        assert result.exit_code == 0, result.output
        obj = json.loads(result.output)
        assert obj["excerpt_id"] == "w01"
        assert obj["n_annotators"] >= 7
        assert obj["labels"]

    def test_score_words(self, runner, fixtures_dir):
        result = runner.invoke(main, [
            "score-words", str(fixtures_dir / "experiment"), "w01",
        ])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert set(obj) == {"by_kind", "micro"}
        assert 0.0 <= obj["micro"]["f1"] <= 1.0

    def test_score_spans(self, runner, fixtures_dir):
        result = runner.invoke(main, [
            "score-spans", str(fixtures_dir / "experiment"), "w01",
        ])
        assert result.exit_code == 0
        obj = json.loads(result.output)
        assert "counts" in obj and "ledger" in obj

    def test_screen_passer_and_failer(self, runner, fixtures_dir):
        exp = str(fixtures_dir / "experiment")
        passed = json.loads(runner.invoke(main, ["screen", exp, "a01"]).stdout)
        assert passed["passed"] is True
        result = runner.invoke(main, ["screen", exp, "a02"])
        failed = json.loads(result.stdout)
        assert failed["passed"] is False
        assert failed["micro_f1"][0] < 0.7

    def test_unknown_excerpt_exits_one(self, runner, fixtures_dir):
        result = runner.invoke(main, [
            "aggregate", str(fixtures_dir / "experiment"), "nope",
        ])
        assert result.exit_code == 1

    def test_readability(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "r"
        result = runner.invoke(main, [
            "readability", str(fixtures_dir / "experiment"), "--out", str(out),
        ])
        assert result.exit_code == 0
        rows = json.loads((out / "readability.json").read_text())
        assert len(rows) == 13  # 3 screening + 10 work excerpts
        assert (out / "readability.csv").exists()

    def test_replay(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "r"
        result = runner.invoke(main, [
            "replay", str(fixtures_dir / "experiment"), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "replay.json").exists()
        assert (out / "instance_accuracy.csv").exists()
        assert (out / "correlations.csv").exists()
        assert (out / "instance_accuracy.png").exists()
        assert "scored 10 excerpts" in result.output

    def test_replay_deterministic(self, runner, fixtures_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, [
                "replay", str(fixtures_dir / "experiment"), "--out", str(out),
                "--no-figures",
            ])
            assert result.exit_code == 0
            outs.append(out)
        for path_a in sorted(outs[0].iterdir()):
            assert path_a.read_bytes() == (outs[1] / path_a.name).read_bytes()
