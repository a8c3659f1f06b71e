from __future__ import annotations

import numpy as np
import pytest

from strokerf.dataset.codebook import FeatureCodebook, FeatureDef
from strokerf.dataset.cohort import Cohort, PatientRecord, apply_exclusions
from strokerf.dataset.generator import default_cohort_spec, generate_synthetic_cohort
from strokerf.evaluate import ConfusionMatrix, roc_curve
from strokerf.experiment import (
    AggregateReport,
    ExperimentPlan,
    FoldOutcome,
    HeatmapGrid,
    RunResult,
    _problem_cohort,
    _problem_seed,
    aggregate,
    compare_groups,
    heatmap_grid,
    report_to_json,
    run_problem,
    summarize_cohort,
    write_heatmap_csv,
    write_importance_csv,
    write_report,
)
from strokerf.forest import ForestConfig, forest_from_json
from strokerf.serialize import canonical_dumps, read_json


@pytest.fixture(scope="module")
def small_cohort():
    spec = default_cohort_spec(n_total=400)
    cohort, _ = apply_exclusions(generate_synthetic_cohort(spec, 404))
    return cohort


def _toy_codebook():
    return FeatureCodebook([
        FeatureDef("severity", "continuous", shortlist=True),
        FeatureDef("noise", "continuous"),
    ])


def _toy_cohort(n_per_class=20, seed=3):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(2 * n_per_class):
        dead = i < n_per_class
        records.append(PatientRecord(
            stroke_type="IS" if i % 2 else "ICH",
            mrs_3m=6 if dead else 1,
            values={"severity": float(rng.normal(20.0 if dead else 10.0, 1.0)),
                    "noise": float(rng.normal(50.0, 1.0))},
        ))
    return Cohort(records, _toy_codebook())


class TestPlan:
    def test_roundtrip(self):
        plan = ExperimentPlan(group="ICH", endpoint="morbidity", repetitions=3,
                              folds=4, k_features=2, n_trees=50, master_seed=9,
                              selection_scope="global",
                              morbidity_population="include-deaths-as-negative")
        assert ExperimentPlan.from_json(plan.to_json()) == plan

    @pytest.mark.parametrize("kwargs,msg", [
        (dict(group="BOTH", endpoint="mortality"), "unknown group"),
        (dict(group="ALL", endpoint="survival"), "unknown endpoint"),
        (dict(group="ALL", endpoint="mortality", repetitions=0), "repetitions"),
        (dict(group="ALL", endpoint="mortality", folds=0), "folds"),
        (dict(group="ALL", endpoint="mortality", k_features=0), "k_features"),
        (dict(group="ALL", endpoint="mortality", tune_low=600, tune_high=500),
         "tune_low"),
        (dict(group="ALL", endpoint="mortality", n_trees=0), "n_trees"),
        (dict(group="ALL", endpoint="mortality", master_seed=-1), "master_seed"),
        (dict(group="ALL", endpoint="mortality", selection_scope="per-tree"),
         "selection_scope"),
        (dict(group="ALL", endpoint="mortality",
              morbidity_population="everyone"), "morbidity_population"),
    ])
    def test_validation(self, kwargs, msg):
        with pytest.raises(ValueError, match=msg):
            ExperimentPlan(**kwargs)

    def test_six_problems_derive_distinct_streams(self):
        seeds = [_problem_seed(ExperimentPlan(group=g, endpoint=e, master_seed=5))
                 for g in ("ALL", "IS", "ICH") for e in ("mortality", "morbidity")]
        assert len(set(seeds)) == 6


class TestProblemCohort:
    def test_morbidity_default_excludes_the_deceased(self):
        coh = _toy_cohort()
        plan = ExperimentPlan(group="ALL", endpoint="morbidity")
        grp = _problem_cohort(coh, plan)
        assert all(r.mrs_3m != 6 for r in grp.records)
        assert len(grp.records) == 20

    def test_morbidity_switch_keeps_deaths_as_negatives(self):
        coh = _toy_cohort()
        plan = ExperimentPlan(group="ALL", endpoint="morbidity",
                              morbidity_population="include-deaths-as-negative")
        grp = _problem_cohort(coh, plan)
        assert len(grp.records) == 40

    def test_mortality_keeps_everyone(self):
        grp = _problem_cohort(_toy_cohort(), ExperimentPlan(group="ALL",
                                                            endpoint="mortality"))
        assert len(grp.records) == 40

    def test_group_filter_applies(self):
        grp = _problem_cohort(_toy_cohort(), ExperimentPlan(group="IS",
                                                            endpoint="mortality"))
        assert {r.stroke_type for r in grp.records} == {"IS"}


class TestRunProblem:
    def test_entry_count_contract(self):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=1,
                              folds=2, k_features=2, n_trees=5, master_seed=1)
        res = run_problem(_toy_cohort(), plan)
        assert len(res.entries) == 2
        assert [(e.repetition, e.fold) for e in res.entries] == [(0, 0), (0, 1)]
        for e in res.entries:
            assert 0.0 <= e.auc <= 1.0
            assert e.confusion.total == e.confusion.tp + e.confusion.fp + \
                e.confusion.tn + e.confusion.fn
            assert e.selected == ("severity", "noise")
            assert set(e.gini) == {"severity", "noise"}

    def test_same_plan_gives_byte_identical_reports(self, small_cohort):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=2,
                              folds=4, n_trees=15, master_seed=21)
        a = run_problem(small_cohort, plan)
        b = run_problem(small_cohort, plan)
        assert canonical_dumps(report_to_json(a)) == canonical_dumps(report_to_json(b))

    def test_worker_count_does_not_change_the_report(self, small_cohort):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=3,
                              folds=4, n_trees=15, master_seed=22)
        serial = run_problem(small_cohort, plan, workers=1)
        threaded = run_problem(small_cohort, plan, workers=3)
        assert canonical_dumps(report_to_json(serial)) == \
            canonical_dumps(report_to_json(threaded))

    def test_master_seed_changes_the_report(self, small_cohort):
        base = dict(group="ALL", endpoint="mortality", repetitions=2, folds=4,
                    n_trees=15)
        a = run_problem(small_cohort, ExperimentPlan(**base, master_seed=1))
        b = run_problem(small_cohort, ExperimentPlan(**base, master_seed=2))
        assert canonical_dumps(report_to_json(a)) != canonical_dumps(report_to_json(b))

    def test_fixed_tree_count_skips_tuning(self, small_cohort):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=1,
                              folds=4, n_trees=12, master_seed=3)
        res = run_problem(small_cohort, plan)
        assert res.tuned_n_trees == 12
        assert res.tuning_table is None

    def test_tuning_fills_the_table(self, small_cohort):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=1,
                              folds=4, tune_low=10, tune_high=20, tune_step=10,
                              master_seed=4)
        res = run_problem(small_cohort, plan)
        assert [n for n, _ in res.tuning_table] == [10, 20]
        assert res.tuned_n_trees in (10, 20)

    def test_global_selection_is_shared_within_a_repetition(self, small_cohort):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=2,
                              folds=4, n_trees=10, master_seed=5,
                              selection_scope="global")
        res = run_problem(small_cohort, plan)
        for rep in range(2):
            sels = {e.selected for e in res.entries if e.repetition == rep}
            assert len(sels) == 1

    def test_degenerate_minority_class_is_an_error(self):
        coh = _toy_cohort(n_per_class=4)
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=1,
                              folds=10, n_trees=5)
        with pytest.raises(ValueError, match="minority class"):
            run_problem(coh, plan)

    def test_rep0_roc_covers_the_balanced_sample(self):
        plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=1,
                              folds=2, k_features=1, n_trees=5, master_seed=6)
        res = run_problem(_toy_cohort(), plan)
        assert res.rep0_roc.n_pos == 20
        assert res.rep0_roc.n_neg == 20


def _entry(rep, fold, auc, acc=0.8, selected=("a",), gini=None, perm=None):
    return FoldOutcome(repetition=rep, fold=fold, auc=auc, acc=acc,
                       confusion=ConfusionMatrix(tp=2, fp=1, tn=2, fn=1, threshold=0.5),
                       selected=selected,
                       gini=dict(gini or {"a": 0.2}),
                       permutation=dict(perm or {"a": 0.1}))


def _result(entries, reps, folds):
    plan = ExperimentPlan(group="ALL", endpoint="mortality", repetitions=reps,
                          folds=folds, n_trees=5)
    curve = roc_curve([0.9, 0.1], [1, 0])
    return RunResult(plan=plan, tuned_n_trees=5, tuning_table=None,
                     entries=tuple(entries), rep0_roc=curve)


class TestAggregate:
    def test_constant_entries(self):
        res = _result([_entry(0, f, 0.9) for f in range(3)], reps=1, folds=3)
        agg = aggregate(res)
        assert agg.mean_auc == 0.9
        assert agg.sd_auc == 0.0
        assert agg.median_auc == 0.9

    def test_min_and_max_span_the_observed_range(self):
        res = _result([_entry(0, 0, 0.7104), _entry(0, 1, 0.9837)], reps=1, folds=2)
        agg = aggregate(res)
        assert agg.min_auc == 0.7104
        assert agg.max_auc == 0.9837

    def test_single_entry_has_zero_sd(self):
        agg = aggregate(_result([_entry(0, 0, 0.85)], reps=1, folds=1))
        assert agg.mean_auc == 0.85
        assert agg.sd_auc == 0.0

    def test_mean_and_sd_match_direct_recomputation(self):
        rng = np.random.default_rng(8)
        aucs = rng.uniform(0.6, 1.0, size=12)
        res = _result([_entry(r, f, float(aucs[r * 4 + f]))
                       for r in range(3) for f in range(4)], reps=3, folds=4)
        agg = aggregate(res)
        v = np.array(agg.auc_values)
        assert agg.mean_auc == float(v.mean())
        assert agg.sd_auc == float(v.std(ddof=1))
        assert agg.n_entries == 12

    def test_importance_sums_and_selection_counts(self):
        entries = [
            _entry(0, 0, 0.8, selected=("a", "b"), gini={"a": 0.2, "b": 0.1},
                   perm={"a": 0.05, "b": 0.01}),
            _entry(0, 1, 0.9, selected=("a",), gini={"a": 0.3},
                   perm={"a": 0.15}),
        ]
        agg = aggregate(_result(entries, reps=1, folds=2))
        assert agg.gini_sums == {"a": 0.5, "b": 0.1}
        assert agg.permutation_sums == {"a": 0.2, "b": 0.01}
        assert agg.selection_counts == {"a": 2, "b": 1}

    def test_entry_count_must_match_the_plan(self):
        with pytest.raises(ValueError, match="fold entries"):
            _result([_entry(0, 0, 0.8)], reps=1, folds=2)

    def test_report_invariants_enforced(self):
        with pytest.raises(ValueError, match="between min and max"):
            AggregateReport(n_entries=1, mean_auc=0.99, sd_auc=0.0, median_auc=0.9,
                            min_auc=0.5, max_auc=0.9, mean_acc=0.8, sd_acc=0.0,
                            gini_sums={}, permutation_sums={}, selection_counts={},
                            auc_values=(0.9,))
        with pytest.raises(ValueError, match="not finite"):
            AggregateReport(n_entries=1, mean_auc=0.9, sd_auc=0.0, median_auc=0.9,
                            min_auc=0.9, max_auc=0.9, mean_acc=0.8, sd_acc=0.0,
                            gini_sums={"a": float("nan")}, permutation_sums={},
                            selection_counts={}, auc_values=(0.9,))


class TestCompareGroups:
    def test_identical_vectors_give_p_one(self):
        v = list(np.random.default_rng(1).uniform(0.7, 0.9, size=30))
        out = compare_groups({"a": v, "b": v})
        pair = out["wilcoxon"]["a_vs_b"]
        assert pair["p"] == 1.0
        assert not pair["reject"]

    def test_strong_shift_is_detected(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0.8, 0.05, size=1000)
        out = compare_groups({"low": a, "high": a + 0.05})
        assert out["wilcoxon"]["high_vs_low"]["p"] < 1e-3
        assert out["wilcoxon"]["high_vs_low"]["reject"]

    def test_same_distribution_rarely_rejects(self):
        rejections = 0
        for seed in range(20):
            rng = np.random.default_rng(3000 + seed)
            a = rng.normal(0.8, 0.05, size=200)
            b = rng.normal(0.8, 0.05, size=200)
            rejections += compare_groups({"a": a, "b": b})["wilcoxon"]["a_vs_b"]["reject"]
        assert rejections <= 4

    def test_normality_entries_cover_each_sample_and_the_pool(self):
        rng = np.random.default_rng(4)
        out = compare_groups({"a": rng.normal(size=40), "b": rng.normal(size=40)})
        assert set(out["normality"]) == {"a", "b", "pooled"}
        for ent in out["normality"].values():
            assert ent["w"] is not None

    def test_skewed_sample_flags_normality_rejection(self):
        rng = np.random.default_rng(5)
        skewed = rng.exponential(size=100) ** 2
        out = compare_groups({"a": skewed, "b": rng.normal(size=100)})
        assert out["normality_rejected"]

    def test_validation_errors(self):
        with pytest.raises(ValueError, match="at least 2"):
            compare_groups({"a": [1.0, 2.0]})
        with pytest.raises(ValueError, match="reserved"):
            compare_groups({"pooled": [1.0], "b": [1.0]})
        with pytest.raises(ValueError, match="equal lengths"):
            compare_groups({"a": [1.0, 2.0, 3.0], "b": [1.0, 2.0]})
        with pytest.raises(ValueError, match="nonempty"):
            compare_groups({"a": [], "b": [1.0]})

    def test_constant_sample_reports_a_note_instead_of_crashing(self):
        out = compare_groups({"a": [0.5] * 10, "b": [0.5] * 10})
        assert "note" in out["normality"]["a"]
        assert out["wilcoxon"]["a_vs_b"]["p"] == 1.0


def _heatmap_codebook():
    return FeatureCodebook([
        FeatureDef("a", "continuous", shortlist=True),
        FeatureDef("b", "continuous"),
        FeatureDef("flag", "binary"),
    ])


def _heatmap_cohort(rows):
    """rows: (a, b, flag, mrs) tuples; None values stay missing."""
    records = []
    for a, b, flag, mrs in rows:
        vals = {}
        if a is not None:
            vals["a"] = float(a)
        if b is not None:
            vals["b"] = float(b)
        if flag is not None:
            vals["flag"] = float(flag)
        records.append(PatientRecord(stroke_type="IS", mrs_3m=mrs, values=vals))
    return Cohort(records, _heatmap_codebook())


def _monotone_forest(features=("a", "b", "flag")):
    """Single stump voting positive when feature "a" exceeds 5."""
    leaf_neg = {"n_node": 4, "class_counts": [4, 0]}
    leaf_pos = {"n_node": 4, "class_counts": [0, 4]}
    root = {"n_node": 8, "class_counts": [4, 4], "feature": "a", "threshold": 5.0,
            "impurity_decrease": 0.5, "left": leaf_neg, "right": leaf_pos}
    return forest_from_json({
        "schema_version": 1,
        "kind": "random_forest",
        "config": ForestConfig(n_trees=1, mtry=1, seed=0).to_json(),
        "feature_names": list(features),
        "n_training_rows": 8,
        "trees": [{"oob_indices": [], "root": root}],
    })


class TestHeatmap:
    def test_grid_shape_and_range(self):
        coh = _heatmap_cohort([(0, 0, 0, 1), (10, 10, 1, 6), (5, 5, 0, 1)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 4)
        assert len(grid.cells) == 4 and all(len(r) == 4 for r in grid.cells)
        assert grid.x_values[0] == 0.0 and grid.x_values[-1] == 10.0
        assert all(0.0 <= v <= 1.0 for row in grid.cells for v in row)

    def test_irrelevant_axis_leaves_columns_constant(self):
        coh = _heatmap_cohort([(0, 0, 0, 1), (10, 10, 1, 6)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 5)
        for j in range(5):
            col = [grid.cells[i][j] for i in range(5)]
            assert len(set(col)) == 1

    def test_monotone_rule_gives_monotone_rows(self):
        coh = _heatmap_cohort([(0, 0, 0, 1), (10, 10, 1, 6)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 6)
        for row in grid.cells:
            assert list(row) == sorted(row)
        assert grid.cells[0][0] == 0.0 and grid.cells[0][-1] == 1.0

    def test_fixed_values_use_median_and_mode(self):
        coh = _heatmap_cohort([(0, 1, 0, 1), (10, 3, 0, 6), (5, 7, 1, 1)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 3)
        assert grid.fixed_values == {"flag": 0.0}
        grid2 = heatmap_grid(_monotone_forest(), coh, "a", "flag", 3)
        assert grid2.fixed_values == {"b": 3.0}

    def test_misclassified_records_are_annotated(self):
        # second record survives yet sits in the positive region
        coh = _heatmap_cohort([(0, 0, 0, 1), (9, 2, 0, 1), (10, 10, 0, 6)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 3, target="mortality")
        assert len(grid.misclassified) == 1
        p = grid.misclassified[0]
        assert (p["x"], p["y"], p["label"], p["vote"]) == (9.0, 2.0, 0, 1.0)

    def test_records_missing_an_axis_value_are_skipped(self):
        coh = _heatmap_cohort([(0, 0, 0, 1), (9, None, 0, 1), (10, 10, 0, 6)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 3)
        assert grid.misclassified == ()

    def test_validation_errors(self):
        coh = _heatmap_cohort([(0, 0, 0, 1), (10, 10, 1, 6)])
        with pytest.raises(ValueError, match="not used to train"):
            heatmap_grid(_monotone_forest(), coh, "a", "unknown", 3)
        with pytest.raises(ValueError, match="must differ"):
            heatmap_grid(_monotone_forest(), coh, "a", "a", 3)
        with pytest.raises(ValueError, match="resolution"):
            heatmap_grid(_monotone_forest(), coh, "a", "b", 1)

    def test_grid_invariants_enforced(self):
        with pytest.raises(ValueError, match="outside"):
            HeatmapGrid(x_feature="a", y_feature="b", x_values=(0.0,),
                        y_values=(0.0,), cells=((1.5,),), fixed_values={})
        with pytest.raises(ValueError, match="cell rows"):
            HeatmapGrid(x_feature="a", y_feature="b", x_values=(0.0,),
                        y_values=(0.0, 1.0), cells=((0.5,),), fixed_values={})


class TestWriters:
    def test_write_report_is_reproducible(self, tmp_path):
        res = _result([_entry(0, f, 0.8 + 0.01 * f) for f in range(2)],
                      reps=1, folds=2)
        first = tmp_path / "one"
        second = tmp_path / "two"
        write_report(res, first)
        write_report(res, second)
        assert (first / "report.json").read_bytes() == \
            (second / "report.json").read_bytes()
        doc = read_json(first / "report.json")
        assert doc["schema_version"] == 1
        assert doc["kind"] == "experiment_report"
        assert doc["aggregate"]["n_entries"] == 2
        assert (first / "roc_ALL_mortality.csv").exists()

    def test_importance_csv_orders_by_gini_sum(self, tmp_path):
        agg = aggregate(_result([
            _entry(0, 0, 0.8, selected=("a", "b"),
                   gini={"a": 0.1, "b": 0.4}, perm={"a": 0.0, "b": 0.2}),
        ], reps=1, folds=1))
        path = tmp_path / "importance.csv"
        write_importance_csv(agg, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "feature,gini_sum,permutation_sum,times_selected"
        assert lines[1].startswith("b,") and lines[2].startswith("a,")
        assert lines[1].endswith(",1")

    def test_heatmap_csv_rows(self, tmp_path):
        coh = _heatmap_cohort([(0, 0, 0, 1), (9, 2, 0, 1), (10, 10, 0, 6)])
        grid = heatmap_grid(_monotone_forest(), coh, "a", "b", 3)
        path = tmp_path / "heatmap.csv"
        write_heatmap_csv(grid, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "kind,a,b,value,label"
        assert len(lines) == 1 + 9 + len(grid.misclassified)
        assert lines[1].startswith("cell,")


class TestSummarize:
    def test_structure_and_rates(self, small_cohort):
        doc = summarize_cohort(small_cohort)
        assert doc["kind"] == "cohort_summary"
        groups = doc["groups"]
        assert set(groups) == {"ALL", "IS", "ICH"}
        assert groups["IS"]["n"] + groups["ICH"]["n"] == groups["ALL"]["n"]
        all_grp = groups["ALL"]
        assert 0.0 < all_grp["mortality"] < 1.0
        assert all_grp["features"]["age"]["mean"] == pytest.approx(72.1, abs=2.0)
        assert {"count", "rate"} <= set(all_grp["features"]["hypertension"])

    def test_group_features_stay_applicable(self, small_cohort):
        doc = summarize_cohort(small_cohort)
        is_features = doc["groups"]["IS"]["features"]
        assert "hematoma_volume_admission_ml" not in is_features
        assert "hematoma_volume_admission_ml" in doc["groups"]["ICH"]["features"]
        assert "dwi_lesion_volume_ml" in is_features
        assert "dwi_lesion_volume_ml" not in doc["groups"]["ICH"]["features"]
