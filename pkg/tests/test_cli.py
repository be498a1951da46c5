from __future__ import annotations

import json
from pathlib import Path

import pytest

from ahpdelphi.cli import main

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def check_golden(name: str, output: str):
    """Compare against the stored golden file byte for byte."""
    expected = (GOLDEN / name).read_text(encoding="utf-8")
    assert output == expected


class TestPriorities:
    def test_table2_json_golden(self, capsys):
        code, out, _ = run(capsys, "priorities", DATA / "table2.json")
        assert code == 0
        check_golden("priorities_table2.json.txt", out)
        data = json.loads(out)
        assert data["lambda_max"] == pytest.approx(3.01, abs=0.01)
        assert data["values"][0] == pytest.approx(0.80, abs=0.01)

    def test_table2_table_golden(self, capsys):
        code, out, _ = run(capsys, "priorities", DATA / "table2.json", "--format", "table")
        assert code == 0
        check_golden("priorities_table2.table.txt", out)

    def test_require_consistent_rejects(self, capsys):
        code, out, err = run(
            capsys, "priorities", DATA / "inconsistent.json", "--require-consistent"
        )
        assert code == 1
        assert "inconsistent" in err
        assert out == ""

    def test_require_consistent_passes(self, capsys):
        code, _, _ = run(
            capsys, "priorities", DATA / "table2.json", "--require-consistent"
        )
        assert code == 0

    def test_byte_identical_between_runs(self, capsys):
        _, first, _ = run(capsys, "priorities", DATA / "table2.json")
        _, second, _ = run(capsys, "priorities", DATA / "table2.json")
        assert first == second


class TestConsistency:
    def test_table2_golden(self, capsys):
        code, out, _ = run(capsys, "consistency", DATA / "table2.json")
        assert code == 0
        check_golden("consistency_table2.json.txt", out)
        data = json.loads(out)
        assert data["consistent"] is True
        assert data["cr"] == pytest.approx(0.01, abs=0.005)

    def test_inconsistent_table_golden(self, capsys):
        code, out, _ = run(
            capsys, "consistency", DATA / "inconsistent.json", "--format", "table"
        )
        assert code == 0
        check_golden("consistency_inconsistent.table.txt", out)
        assert "deviation 27.000" in out

    def test_ri_override(self, capsys):
        code, out, _ = run(capsys, "consistency", DATA / "table2.json", "--ri", "0.58")
        data = json.loads(out)
        assert data["ri"] == 0.58
        assert data["cr"] == pytest.approx(0.0061, abs=0.0005)

    def test_broken_reciprocity_diagnostic(self, capsys):
        code, out, err = run(capsys, "consistency", DATA / "broken_reciprocity.json")
        assert code == 1
        assert "reciprocity" in err
        assert "broken_reciprocity.json" in err


class TestRi:
    def test_cached_table_golden(self, capsys):
        code, out, _ = run(capsys, "ri", "3")
        assert code == 0
        check_golden("ri_3_cached.json.txt", out)

    def test_sampled_deterministic(self, capsys):
        code, first, _ = run(capsys, "ri", "4", "--samples", "2000", "--seed", "11")
        assert code == 0
        _, second, _ = run(capsys, "ri", "4", "--samples", "2000", "--seed", "11")
        assert first == second

    def test_order_two_is_zero(self, capsys):
        _, out, _ = run(capsys, "ri", "2")
        assert json.loads(out)["random_index"] == 0.0

    def test_bad_order(self, capsys):
        code, _, err = run(capsys, "ri", "0")
        assert code == 1
        assert "order" in err


class TestConcordance:
    def test_identical_golden(self, capsys):
        code, out, _ = run(capsys, "concordance", DATA / "identical3.json")
        assert code == 0
        check_golden("concordance_identical3.json.txt", out)
        assert json.loads(out)["w_coefficient"] == 1.0

    def test_split_thresholds(self, capsys):
        _, out, _ = run(capsys, "concordance", DATA / "split_rankings.json")
        data = json.loads(out)
        assert data["w_coefficient"] == pytest.approx(14 / 18, abs=1e-12)
        assert data["agreed"] is True
        _, out, _ = run(
            capsys, "concordance", DATA / "split_rankings.json", "--threshold", "0.8"
        )
        assert json.loads(out)["agreed"] is False


class TestConflicts:
    def test_identical_rankings_empty(self, capsys):
        code, out, _ = run(capsys, "conflicts", DATA / "identical3.json")
        assert code == 0
        assert json.loads(out)["conflicts"] == []

    def test_split_golden(self, capsys):
        code, out, _ = run(capsys, "conflicts", DATA / "split_rankings.json")
        assert code == 0
        check_golden("conflicts_split.json.txt", out)
        data = json.loads(out)["conflicts"]
        assert len(data) == 1
        assert data[0]["prefers_b"] == ["p3"]

    def test_table_output(self, capsys):
        _, out, _ = run(capsys, "conflicts", DATA / "split_rankings.json", "--format", "table")
        assert "safety vs speed" in out


class TestAggregate:
    def test_equal_weights_golden(self, capsys):
        code, out, _ = run(
            capsys, "aggregate", DATA / "vectors.json", DATA / "weights_equal.json"
        )
        assert code == 0
        check_golden("aggregate_equal.json.txt", out)
        assert json.loads(out)["values"] == [0.5, 0.25, 0.25]

    def test_unequal_weights(self, capsys):
        _, out, _ = run(
            capsys, "aggregate", DATA / "vectors.json", DATA / "weights_unequal.json"
        )
        assert json.loads(out)["values"] == [0.65, 0.175, 0.175]

    def test_missing_weight_is_domain_error(self, capsys, tmp_path):
        lonely = tmp_path / "weights.json"
        lonely.write_text(
            json.dumps({"weights": [{"stakeholder_id": "p1", "weight": 1.0}]})
        )
        code, _, err = run(capsys, "aggregate", DATA / "vectors.json", lonely)
        assert code == 1
        assert "missing weights" in err


class TestUtility:
    def test_build_golden(self, capsys):
        code, out, _ = run(
            capsys,
            "utility", "build",
            DATA / "priorities_mission.json", DATA / "prefs_identity.json",
            "--mode", "raw_linear",
        )
        assert code == 0
        check_golden("utility_build_raw.json.txt", out)

    def test_build_rejects_sigmoid_in_raw_mode(self, capsys):
        code, _, err = run(
            capsys,
            "utility", "build",
            DATA / "priorities_mission.json", DATA / "prefs_sigmoid.json",
            "--mode", "raw_linear",
        )
        assert code == 1
        assert "raw_linear" in err

    def test_evaluate_mission_sample(self, capsys, tmp_path):
        _, doc, _ = run(
            capsys,
            "utility", "build",
            DATA / "priorities_mission.json", DATA / "prefs_identity.json",
            "--mode", "raw_linear",
        )
        upath = tmp_path / "utility.json"
        upath.write_text(doc)
        code, out, _ = run(capsys, "utility", "evaluate", upath, DATA / "sample_mission.json")
        assert code == 0
        assert json.loads(out)["value"] == 15.0

    def test_export_expression_golden(self, capsys, tmp_path):
        _, doc, _ = run(
            capsys,
            "utility", "build",
            DATA / "priorities_mission.json", DATA / "prefs_identity.json",
            "--mode", "raw_linear",
        )
        upath = tmp_path / "utility.json"
        upath.write_text(doc)
        code, out, _ = run(
            capsys, "utility", "export", upath,
            "--export-format", "human_readable_expression",
        )
        assert code == 0
        assert out == "U(m) = 0.800·safety(m) + 0.100·duration(m) + 0.100·energy(m)\n"

    def test_export_canonical_round_trip_is_stable(self, capsys, tmp_path):
        _, doc, _ = run(
            capsys,
            "utility", "build",
            DATA / "priorities_mission.json", DATA / "prefs_sigmoid.json",
        )
        upath = tmp_path / "utility.json"
        upath.write_text(doc)
        _, exported, _ = run(capsys, "utility", "export", upath)
        assert exported == doc


class TestErrors:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "priorities", "no-such-file.json")
        assert code == 1
        assert "not found" in err

    def test_malformed_json_has_line_diagnostic(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"attributes": ["a", "b"\n  "entries": []}')
        code, _, err = run(capsys, "priorities", bad)
        assert code == 1
        assert "bad.json:2:" in err

    def test_usage_error_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["not-a-command"])
        assert exc.value.code == 2
