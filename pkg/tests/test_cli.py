from __future__ import annotations

import json

import pytest

from strokerf.cli import main
from strokerf.dataset.cohort import load_cohort_csv
from strokerf.forest import load_forest
from strokerf.serialize import read_json


@pytest.fixture(scope="module")
def cohort_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    assert main(["generate", "--n", "300", "--seed", "11",
                 "--out-dir", str(out)]) == 0
    return out / "cohort.csv"


RUN_FLAGS = ["--reps", "2", "--folds", "5", "--trees", "12", "--seed", "4"]


class TestGenerate:
    def test_writes_a_loadable_cohort(self, cohort_csv):
        cohort = load_cohort_csv(cohort_csv)
        assert len(cohort.records) == 300

    def test_same_seed_is_byte_identical(self, cohort_csv, tmp_path):
        assert main(["generate", "--n", "300", "--seed", "11",
                     "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "cohort.csv").read_bytes() == cohort_csv.read_bytes()

    def test_config_file_overrides_n(self, tmp_path):
        from strokerf.dataset.generator import default_cohort_spec
        cfg = tmp_path / "spec.json"
        cfg.write_text(default_cohort_spec(n_total=120).to_json())
        assert main(["generate", "--config", str(cfg), "--n", "999",
                     "--seed", "1", "--out-dir", str(tmp_path)]) == 0
        assert len(load_cohort_csv(tmp_path / "cohort.csv").records) == 120


class TestRun:
    def test_writes_report_roc_and_importance(self, cohort_csv, tmp_path):
        assert main(["run", str(cohort_csv), "--group", "ALL",
                     "--endpoint", "mortality", *RUN_FLAGS,
                     "--out-dir", str(tmp_path)]) == 0
        doc = read_json(tmp_path / "report.json")
        assert doc["kind"] == "experiment_report"
        assert doc["plan"]["group"] == "ALL"
        assert len(doc["entries"]) == 10
        assert (tmp_path / "roc_ALL_mortality.csv").exists()
        assert (tmp_path / "importance.csv").exists()

    def test_reports_are_stable_across_invocations_and_workers(self, cohort_csv,
                                                               tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(["run", str(cohort_csv), *RUN_FLAGS, "--workers", "1",
                     "--out-dir", str(a)]) == 0
        assert main(["run", str(cohort_csv), *RUN_FLAGS, "--workers", "3",
                     "--out-dir", str(b)]) == 0
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()

    def test_save_forest_writes_a_loadable_model(self, cohort_csv, tmp_path):
        assert main(["run", str(cohort_csv), *RUN_FLAGS, "--save-forest",
                     "--out-dir", str(tmp_path)]) == 0
        forest = load_forest(tmp_path / "forest.json")
        assert forest.n_trees == 12
        assert len(forest.feature_names) == 7

    def test_plan_config_file(self, cohort_csv, tmp_path):
        from strokerf.experiment import ExperimentPlan
        plan = ExperimentPlan(group="IS", endpoint="mortality", repetitions=1,
                              folds=5, n_trees=8, master_seed=2)
        cfg = tmp_path / "plan.json"
        cfg.write_text(json.dumps(plan.to_json()))
        assert main(["run", str(cohort_csv), "--config", str(cfg),
                     "--out-dir", str(tmp_path)]) == 0
        doc = read_json(tmp_path / "report.json")
        assert doc["plan"] == plan.to_json()
        assert (tmp_path / "roc_IS_mortality.csv").exists()

    def test_missing_cohort_fails_with_a_diagnostic(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.csv"), *RUN_FLAGS,
                     "--out-dir", str(tmp_path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_plan_value_fails_cleanly(self, cohort_csv, tmp_path, capsys):
        assert main(["run", str(cohort_csv), "--reps", "0", "--trees", "5",
                     "--out-dir", str(tmp_path)]) == 1
        assert "repetitions" in capsys.readouterr().err


class TestHeatmapCommand:
    def test_grid_csv_has_all_cells(self, cohort_csv, tmp_path):
        assert main(["run", str(cohort_csv), *RUN_FLAGS, "--save-forest",
                     "--out-dir", str(tmp_path)]) == 0
        assert main(["heatmap", str(tmp_path / "forest.json"), str(cohort_csv),
                     "--x", "nihss_48h", "--y", "nihss_24h",
                     "--resolution", "8", "--out-dir", str(tmp_path)]) == 0
        lines = (tmp_path / "heatmap.csv").read_text().splitlines()
        cells = [ln for ln in lines[1:] if ln.startswith("cell,")]
        assert len(cells) == 64

    def test_unknown_feature_fails(self, cohort_csv, tmp_path, capsys):
        assert main(["run", str(cohort_csv), *RUN_FLAGS, "--save-forest",
                     "--out-dir", str(tmp_path)]) == 0
        assert main(["heatmap", str(tmp_path / "forest.json"), str(cohort_csv),
                     "--x", "bogus", "--y", "nihss_24h",
                     "--out-dir", str(tmp_path)]) == 1
        assert "bogus" in capsys.readouterr().err


class TestCompareCommand:
    def test_compare_two_reports(self, cohort_csv, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(["run", str(cohort_csv), "--group", "ALL", *RUN_FLAGS,
                     "--out-dir", str(a)]) == 0
        assert main(["run", str(cohort_csv), "--group", "IS", *RUN_FLAGS,
                     "--out-dir", str(b)]) == 0
        assert main(["compare", str(a / "report.json"), str(b / "report.json"),
                     "--out-dir", str(tmp_path)]) == 0
        doc = read_json(tmp_path / "compare.json")
        assert "ALL_mortality_vs_IS_mortality" in doc["wilcoxon"]
        assert doc["schema_version"] == 1

    def test_single_report_is_rejected(self, cohort_csv, tmp_path, capsys):
        a = tmp_path / "a"
        assert main(["run", str(cohort_csv), *RUN_FLAGS, "--out-dir", str(a)]) == 0
        assert main(["compare", str(a / "report.json"),
                     "--out-dir", str(tmp_path)]) == 1
        assert "at least 2" in capsys.readouterr().err

    def test_non_report_json_is_rejected(self, tmp_path, capsys):
        bogus = tmp_path / "x.json"
        bogus.write_text("{}")
        assert main(["compare", str(bogus), str(bogus),
                     "--out-dir", str(tmp_path)]) == 1
        assert "not an experiment report" in capsys.readouterr().err


class TestSummarizeCommand:
    def test_summary_json(self, cohort_csv, tmp_path):
        assert main(["summarize", str(cohort_csv), "--out-dir", str(tmp_path)]) == 0
        doc = read_json(tmp_path / "summary.json")
        assert doc["kind"] == "cohort_summary"
        assert doc["groups"]["ALL"]["n"] == 300


class TestUsageErrors:
    def test_unknown_subcommand_exits_2_with_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_no_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
