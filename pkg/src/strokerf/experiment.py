"""Orchestration of the six prediction problems.

A problem is one (group, endpoint) pair.  Each repetition draws a fresh
balanced subsample and runs a stratified k-fold loop; every random stream
is derived from the plan's master seed, so a finished report is a pure
function of (cohort, plan) regardless of worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from strokerf.dataset.codebook import GROUPS
from strokerf.dataset.cohort import Cohort, filter_group
from strokerf.evaluate import (
    ConfusionMatrix,
    RocCurve,
    accuracy,
    auc_trapezoid,
    roc_curve,
    save_roc_csv,
)
from strokerf.forest import (
    Forest,
    ForestConfig,
    default_mtry,
    gini_importance,
    permutation_importance,
    predict_proba,
    train_forest,
    tune_num_trees,
)
from strokerf.preprocess import (
    build_resample_plan,
    impute_missing,
    score_features_ttest,
    select_top_k,
    undersample,
)
from strokerf.stats import describe, shapiro_wilk, wilcoxon_signed_rank

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "ExperimentPlan",
    "FoldOutcome",
    "RunResult",
    "AggregateReport",
    "HeatmapGrid",
    "run_problem",
    "aggregate",
    "compare_groups",
    "heatmap_grid",
    "report_to_json",
    "write_report",
    "write_importance_csv",
    "write_heatmap_csv",
    "summarize_cohort",
]

REPORT_SCHEMA_VERSION = 1

ENDPOINT_CHOICES = ("mortality", "morbidity")
SELECTION_SCOPES = ("per-fold", "global")
MORBIDITY_POPULATIONS = ("exclude-deaths", "include-deaths-as-negative")

_ALPHA = 0.05
# stream tags under the per-repetition seed: 0..2 are taken by the
# resample plan (shuffle, undersample, folds)
_STREAM_FOREST = 3
_STREAM_PERMUTATION = 4
_TUNE_STREAM_TAG = 0x54

_INNER_TUNE_FOLDS = 5


# ======================================================================
# Plan and result types
# ======================================================================

@dataclass(frozen=True)
class ExperimentPlan:
    """Everything that identifies one prediction problem run.

    ``n_trees`` pins the forest size and skips tuning; leaving it None
    tunes the tree count once per problem on a dedicated balanced
    subsample over the grid {tune_low, ..., tune_high} step ``tune_step``.
    """

    group: str
    endpoint: str
    repetitions: int = 100
    folds: int = 10
    k_features: int = 7
    tune_low: int = 500
    tune_high: int = 1000
    tune_step: int = 100
    n_trees: int | None = None
    master_seed: int = 0
    selection_scope: str = "per-fold"
    morbidity_population: str = "exclude-deaths"

    def __post_init__(self) -> None:
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}, expected one of {GROUPS}")
        if self.endpoint not in ENDPOINT_CHOICES:
            raise ValueError(
                f"unknown endpoint {self.endpoint!r}, expected one of {ENDPOINT_CHOICES}")
        for name in ("repetitions", "folds", "k_features", "tune_low", "tune_high",
                     "tune_step"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.tune_low > self.tune_high:
            raise ValueError(
                f"tune_low {self.tune_low} exceeds tune_high {self.tune_high}")
        if self.n_trees is not None and self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1 or None, got {self.n_trees}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be non-negative, got {self.master_seed}")
        if self.selection_scope not in SELECTION_SCOPES:
            raise ValueError(
                f"unknown selection_scope {self.selection_scope!r}, "
                f"expected one of {SELECTION_SCOPES}")
        if self.morbidity_population not in MORBIDITY_POPULATIONS:
            raise ValueError(
                f"unknown morbidity_population {self.morbidity_population!r}, "
                f"expected one of {MORBIDITY_POPULATIONS}")

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "endpoint": self.endpoint,
            "repetitions": self.repetitions,
            "folds": self.folds,
            "k_features": self.k_features,
            "tune_low": self.tune_low,
            "tune_high": self.tune_high,
            "tune_step": self.tune_step,
            "n_trees": self.n_trees,
            "master_seed": self.master_seed,
            "selection_scope": self.selection_scope,
            "morbidity_population": self.morbidity_population,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentPlan":
        return cls(
            group=doc["group"],
            endpoint=doc["endpoint"],
            repetitions=int(doc["repetitions"]),
            folds=int(doc["folds"]),
            k_features=int(doc["k_features"]),
            tune_low=int(doc["tune_low"]),
            tune_high=int(doc["tune_high"]),
            tune_step=int(doc["tune_step"]),
            n_trees=None if doc["n_trees"] is None else int(doc["n_trees"]),
            master_seed=int(doc["master_seed"]),
            selection_scope=doc["selection_scope"],
            morbidity_population=doc["morbidity_population"],
        )


@dataclass(frozen=True)
class FoldOutcome:
    """Test-fold metrics of one trained forest."""

    repetition: int
    fold: int
    auc: float
    acc: float
    confusion: ConfusionMatrix
    selected: tuple[str, ...]
    gini: dict[str, float]
    permutation: dict[str, float]

    def __post_init__(self) -> None:
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc must lie in [0, 1], got {self.auc}")

    def to_json(self) -> dict:
        return {
            "repetition": self.repetition,
            "fold": self.fold,
            "auc": self.auc,
            "acc": self.acc,
            "confusion": self.confusion.to_json(),
            "selected": list(self.selected),
            "gini_importance": dict(self.gini),
            "permutation_importance": dict(self.permutation),
        }


@dataclass(frozen=True)
class RunResult:
    plan: ExperimentPlan
    tuned_n_trees: int
    tuning_table: tuple[tuple[int, float], ...] | None
    entries: tuple[FoldOutcome, ...]
    rep0_roc: RocCurve

    def __post_init__(self) -> None:
        want = self.plan.repetitions * self.plan.folds
        if len(self.entries) != want:
            raise ValueError(
                f"expected {want} fold entries, got {len(self.entries)}")

    def to_json(self) -> dict:
        return {
            "plan": self.plan.to_json(),
            "tuned_n_trees": self.tuned_n_trees,
            "tuning_table": None if self.tuning_table is None
            else [[n, auc] for n, auc in self.tuning_table],
            "entries": [e.to_json() for e in self.entries],
        }


@dataclass(frozen=True)
class AggregateReport:
    n_entries: int
    mean_auc: float
    sd_auc: float
    median_auc: float
    min_auc: float
    max_auc: float
    mean_acc: float
    sd_acc: float
    gini_sums: dict[str, float]
    permutation_sums: dict[str, float]
    selection_counts: dict[str, int]
    auc_values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.min_auc <= self.mean_auc <= self.max_auc:
            raise ValueError("mean auc must lie between min and max")
        if self.sd_auc < 0.0 or self.sd_acc < 0.0:
            raise ValueError("standard deviations must be non-negative")
        for sums in (self.gini_sums, self.permutation_sums):
            for name, v in sums.items():
                if not math.isfinite(v):
                    raise ValueError(f"importance sum for {name!r} is not finite")

    def to_json(self) -> dict:
        return {
            "n_entries": self.n_entries,
            "mean_auc": self.mean_auc,
            "sd_auc": self.sd_auc,
            "median_auc": self.median_auc,
            "min_auc": self.min_auc,
            "max_auc": self.max_auc,
            "mean_acc": self.mean_acc,
            "sd_acc": self.sd_acc,
            "gini_sums": dict(self.gini_sums),
            "permutation_sums": dict(self.permutation_sums),
            "selection_counts": dict(self.selection_counts),
            "auc_values": list(self.auc_values),
        }


@dataclass(frozen=True)
class HeatmapGrid:
    """Vote fractions over a 2-feature grid, other features held fixed.

    ``cells[i][j]`` is the prediction at (x_values[j], y_values[i]).
    ``misclassified`` holds the cohort records the forest gets wrong,
    positioned by their own x/y values.
    """

    x_feature: str
    y_feature: str
    x_values: tuple[float, ...]
    y_values: tuple[float, ...]
    cells: tuple[tuple[float, ...], ...]
    fixed_values: dict[str, float]
    misclassified: tuple[dict, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.cells) != len(self.y_values):
            raise ValueError(
                f"expected {len(self.y_values)} cell rows, got {len(self.cells)}")
        for row in self.cells:
            if len(row) != len(self.x_values):
                raise ValueError(
                    f"expected {len(self.x_values)} cells per row, got {len(row)}")
            for v in row:
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"cell value {v} outside [0, 1]")

    def to_json(self) -> dict:
        return {
            "x_feature": self.x_feature,
            "y_feature": self.y_feature,
            "x_values": list(self.x_values),
            "y_values": list(self.y_values),
            "cells": [list(row) for row in self.cells],
            "fixed_values": dict(self.fixed_values),
            "misclassified": [dict(p) for p in self.misclassified],
        }


# ======================================================================
# Problem execution
# ======================================================================

def _derived_seed(*key) -> int:
    return int(np.random.SeedSequence(tuple(key)).generate_state(1, np.uint64)[0])


def _problem_seed(plan: ExperimentPlan) -> int:
    # distinct per (group, endpoint) so the six problems never share streams
    return _derived_seed(plan.master_seed, GROUPS.index(plan.group),
                         ENDPOINT_CHOICES.index(plan.endpoint))


def _problem_cohort(cohort: Cohort, plan: ExperimentPlan) -> Cohort:
    grp = filter_group(cohort, plan.group)
    if plan.endpoint == "morbidity" and plan.morbidity_population == "exclude-deaths":
        keep = [i for i, r in enumerate(grp.records) if r.mrs_3m != 6]
        grp = grp.subset(keep)
    if not grp.records:
        raise ValueError(f"no records left for group {plan.group!r}")
    return grp


def _select_features(sub: Cohort, endpoint: str, k: int) -> tuple[str, ...]:
    report = score_features_ttest(sub, endpoint)
    return tuple(select_top_k(report, k))


def _tune_problem(grp: Cohort, plan: ExperimentPlan, seed: int):
    """One tuning pass on a dedicated balanced subsample."""
    sub = undersample(grp, plan.endpoint, np.random.SeedSequence((seed, _TUNE_STREAM_TAG)))
    sub = impute_missing(sub, sub)
    selected = _select_features(sub, plan.endpoint, plan.k_features)
    X, _ = sub.feature_matrix(selected)
    y = sub.labels(plan.endpoint)
    cfg = ForestConfig(n_trees=1, mtry=default_mtry(len(selected)),
                       seed=_derived_seed(seed, _TUNE_STREAM_TAG, 1))
    res = tune_num_trees(X, y, selected, cfg, low=plan.tune_low, high=plan.tune_high,
                         step=plan.tune_step, inner_folds=_INNER_TUNE_FOLDS)
    return res.best_n_trees, res.table


def _run_repetition(grp: Cohort, labels: np.ndarray, plan: ExperimentPlan,
                    resample_plan, rep: int, n_trees: int):
    rows, folds = resample_plan.materialize(rep, labels)
    sub = grp.subset(rows)
    y_sub = sub.labels(plan.endpoint)
    rep_seed = resample_plan.repetition_seeds[rep]

    global_selection: tuple[str, ...] | None = None
    if plan.selection_scope == "global":
        whole = impute_missing(sub, sub)
        global_selection = _select_features(whole, plan.endpoint, plan.k_features)

    entries = []
    pooled_votes: list[np.ndarray] = []
    pooled_labels: list[np.ndarray] = []
    for f in range(folds.k):
        tr = folds.train_indices(f)
        te = folds.test_indices(f)
        train_raw = sub.subset(tr)
        train_coh = impute_missing(train_raw, train_raw)
        test_coh = impute_missing(train_raw, sub.subset(te))
        if global_selection is None:
            selected = _select_features(train_coh, plan.endpoint, plan.k_features)
        else:
            selected = global_selection
        Xtr, _ = train_coh.feature_matrix(selected)
        Xte, _ = test_coh.feature_matrix(selected)
        ytr = y_sub[tr]
        yte = y_sub[te]
        cfg = ForestConfig(n_trees=n_trees, mtry=default_mtry(len(selected)),
                           seed=_derived_seed(rep_seed, _STREAM_FOREST, f))
        try:
            forest = train_forest(Xtr, ytr, selected, cfg)
            votes = predict_proba(forest, Xte)
            auc = auc_trapezoid(roc_curve(votes, yte))
            acc, cm = accuracy(votes, yte)
            gini = gini_importance(forest)
            perm = permutation_importance(
                forest, Xtr, ytr, seed=_derived_seed(rep_seed, _STREAM_PERMUTATION, f))
        except ValueError as e:
            raise ValueError(f"repetition {rep}, fold {f}: {e}") from e
        entries.append(FoldOutcome(repetition=rep, fold=f, auc=float(auc),
                                   acc=float(acc), confusion=cm, selected=selected,
                                   gini=gini, permutation=perm))
        pooled_votes.append(np.asarray(votes))
        pooled_labels.append(yte)
    curve = roc_curve(np.concatenate(pooled_votes), np.concatenate(pooled_labels))
    return entries, curve


def run_problem(cohort: Cohort, plan: ExperimentPlan, workers: int = 1) -> RunResult:
    """Execute one prediction problem; deterministic given (cohort, plan).

    Repetitions may run on ``workers`` threads; the tree kernels release
    the interpreter lock, and results merge in repetition order.
    """
    grp = _problem_cohort(cohort, plan)
    labels = grp.labels(plan.endpoint)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if min(n_pos, n_neg) < plan.folds:
        raise ValueError(
            f"minority class has {min(n_pos, n_neg)} records for group "
            f"{plan.group!r} endpoint {plan.endpoint!r}; need at least "
            f"{plan.folds} to stratify")

    seed = _problem_seed(plan)
    if plan.n_trees is not None:
        tuned, table = plan.n_trees, None
    else:
        tuned, table = _tune_problem(grp, plan, seed)

    resample_plan = build_resample_plan(seed, plan.repetitions, plan.folds)

    def one(rep: int):
        return _run_repetition(grp, labels, plan, resample_plan, rep, tuned)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_rep = list(ex.map(one, range(plan.repetitions)))
    else:
        per_rep = [one(rep) for rep in range(plan.repetitions)]

    entries = tuple(e for rep_entries, _ in per_rep for e in rep_entries)
    return RunResult(plan=plan, tuned_n_trees=tuned, tuning_table=table,
                     entries=entries, rep0_roc=per_rep[0][1])


# ======================================================================
# Aggregation and comparison
# ======================================================================

def _sample_sd(x: np.ndarray) -> float:
    return 0.0 if x.size == 1 else float(x.std(ddof=1))


def aggregate(result: RunResult) -> AggregateReport:
    """Means, spreads, and per-feature importance sums over all fold entries."""
    if not result.entries:
        raise ValueError("cannot aggregate an empty result")
    aucs = np.array([e.auc for e in result.entries])
    accs = np.array([e.acc for e in result.entries])
    gini_sums: dict[str, float] = {}
    perm_sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for e in result.entries:
        for name, v in e.gini.items():
            gini_sums[name] = gini_sums.get(name, 0.0) + v
        for name, v in e.permutation.items():
            perm_sums[name] = perm_sums.get(name, 0.0) + v
        for name in e.selected:
            counts[name] = counts.get(name, 0) + 1
    return AggregateReport(
        n_entries=len(result.entries),
        mean_auc=float(aucs.mean()),
        sd_auc=_sample_sd(aucs),
        median_auc=float(np.median(aucs)),
        min_auc=float(aucs.min()),
        max_auc=float(aucs.max()),
        mean_acc=float(accs.mean()),
        sd_acc=_sample_sd(accs),
        gini_sums=gini_sums,
        permutation_sums=perm_sums,
        selection_counts=counts,
        auc_values=tuple(float(a) for a in aucs),
    )


def _normality_entry(values: np.ndarray) -> dict:
    try:
        res = shapiro_wilk(values)
    except ValueError as e:
        return {"w": None, "p": None, "note": str(e)}
    return {"w": res.statistic, "p": res.p_value}


def compare_groups(samples: dict) -> dict:
    """Normality screen plus paired two-sided location tests for every pair.

    The signed-rank test is reported for each pair regardless of the
    normality outcome; ``normality_rejected`` records whether any
    Shapiro-Wilk test (per sample or pooled) rejected at 0.05, which is
    the condition that makes the nonparametric comparison mandatory.
    """
    if len(samples) < 2:
        raise ValueError(f"need at least 2 named samples, got {len(samples)}")
    if "pooled" in samples:
        raise ValueError("sample name 'pooled' is reserved for the combined test")
    arrays = {name: np.asarray(v, dtype=float) for name, v in samples.items()}
    for name, v in arrays.items():
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"sample {name!r} must be a nonempty vector")
    names = sorted(arrays)
    normality = {name: _normality_entry(arrays[name]) for name in names}
    normality["pooled"] = _normality_entry(np.concatenate([arrays[n] for n in names]))
    rejected = any(ent["p"] is not None and ent["p"] < _ALPHA
                   for ent in normality.values())
    pairs = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if arrays[a].size != arrays[b].size:
                raise ValueError(
                    f"paired comparison {a!r} vs {b!r} needs equal lengths, "
                    f"got {arrays[a].size} and {arrays[b].size}")
            res = wilcoxon_signed_rank(arrays[a], arrays[b])
            pairs[f"{a}_vs_{b}"] = {
                "statistic": res.statistic,
                "p": res.p_value,
                "n_effective": res.n_effective,
                "method": res.method,
                "reject": bool(res.p_value < _ALPHA),
            }
    return {
        "alpha": _ALPHA,
        "normality": normality,
        "normality_rejected": rejected,
        "wilcoxon": pairs,
    }


# ======================================================================
# Decision-boundary heatmap
# ======================================================================

def _fixed_value(cohort: Cohort, name: str) -> float:
    f = cohort.codebook.get(name)
    vals = [r.values[name] for r in cohort.records if name in r.values]
    if not vals:
        raise ValueError(f"feature {name!r} has no observed values to hold fixed")
    if f.kind == "binary":
        return 1.0 if 2 * sum(vals) > len(vals) else 0.0
    return float(np.median(np.asarray(vals)))


def heatmap_grid(forest: Forest, cohort: Cohort, x_feature: str, y_feature: str,
                 resolution: int, *, target: str = "mortality") -> HeatmapGrid:
    """Prediction surface over the observed ranges of two trained features.

    Every other trained feature is pinned at its cohort median (mode for
    binaries).  Cohort records the forest misclassifies against ``target``
    are returned as annotation points; records missing either axis value
    are skipped, and other missing values fall back to the pinned ones.
    """
    for name in (x_feature, y_feature):
        if name not in forest.feature_names:
            raise ValueError(f"feature {name!r} was not used to train this forest")
    if x_feature == y_feature:
        raise ValueError("x_feature and y_feature must differ")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")

    def observed(name: str) -> np.ndarray:
        vals = np.array([r.values[name] for r in cohort.records if name in r.values])
        if vals.size == 0:
            raise ValueError(f"feature {name!r} has no observed values in the cohort")
        return vals

    xs = np.linspace(observed(x_feature).min(), observed(x_feature).max(), resolution)
    ys = np.linspace(observed(y_feature).min(), observed(y_feature).max(), resolution)
    fixed = {name: _fixed_value(cohort, name) for name in forest.feature_names
             if name not in (x_feature, y_feature)}

    xi = forest.feature_names.index(x_feature)
    yi = forest.feature_names.index(y_feature)
    base = np.empty(len(forest.feature_names))
    for j, name in enumerate(forest.feature_names):
        if name in fixed:
            base[j] = fixed[name]
    grid = np.tile(base, (resolution * resolution, 1))
    xx, yy = np.meshgrid(xs, ys)
    grid[:, xi] = xx.ravel()
    grid[:, yi] = yy.ravel()
    votes = predict_proba(forest, grid).reshape(resolution, resolution)

    labels = cohort.labels(target)
    points = []
    for i, rec in enumerate(cohort.records):
        if x_feature not in rec.values or y_feature not in rec.values:
            continue
        row = base.copy()
        for j, name in enumerate(forest.feature_names):
            if name in rec.values:
                row[j] = rec.values[name]
        vote = predict_proba(forest, row)
        if (vote >= 0.5) != bool(labels[i]):
            points.append({"x": float(rec.values[x_feature]),
                           "y": float(rec.values[y_feature]),
                           "label": int(labels[i]), "vote": float(vote)})
    return HeatmapGrid(
        x_feature=x_feature, y_feature=y_feature,
        x_values=tuple(float(v) for v in xs),
        y_values=tuple(float(v) for v in ys),
        cells=tuple(tuple(float(v) for v in row) for row in votes),
        fixed_values=fixed,
        misclassified=tuple(points),
    )


# ======================================================================
# Report output
# ======================================================================

def report_to_json(result: RunResult) -> dict:
    doc = result.to_json()
    doc["schema_version"] = REPORT_SCHEMA_VERSION
    doc["kind"] = "experiment_report"
    doc["aggregate"] = aggregate(result).to_json()
    return doc


def write_report(result: RunResult, out_dir) -> list[str]:
    """report.json plus the first repetition's pooled test-fold ROC."""
    from strokerf.serialize import write_canonical_json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    report_path = out / "report.json"
    write_canonical_json(report_to_json(result), report_path)
    written.append(str(report_path))
    roc_path = out / f"roc_{result.plan.group}_{result.plan.endpoint}.csv"
    save_roc_csv(result.rep0_roc, roc_path)
    written.append(str(roc_path))
    return written


def write_importance_csv(report: AggregateReport, path) -> None:
    """Summed importances, largest impurity contribution first."""
    names = sorted(set(report.gini_sums) | set(report.permutation_sums)
                   | set(report.selection_counts),
                   key=lambda n: (-report.gini_sums.get(n, 0.0), n))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "gini_sum", "permutation_sum", "times_selected"])
        for n in names:
            w.writerow([n, repr(report.gini_sums.get(n, 0.0)),
                        repr(report.permutation_sums.get(n, 0.0)),
                        report.selection_counts.get(n, 0)])


def write_heatmap_csv(grid: HeatmapGrid, path) -> None:
    """Long-format cells plus misclassified-record annotation rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", grid.x_feature, grid.y_feature, "value", "label"])
        for i, yv in enumerate(grid.y_values):
            for j, xv in enumerate(grid.x_values):
                w.writerow(["cell", repr(xv), repr(yv), repr(grid.cells[i][j]), ""])
        for p in grid.misclassified:
            w.writerow(["record", repr(p["x"]), repr(p["y"]), repr(p["vote"]),
                        p["label"]])


# ======================================================================
# Descriptive summary
# ======================================================================

def summarize_cohort(cohort: Cohort) -> dict:
    """Per-group record counts, outcome rates, and feature summaries."""
    if not cohort.records:
        raise ValueError("cannot summarize an empty cohort")
    out: dict = {"schema_version": REPORT_SCHEMA_VERSION, "kind": "cohort_summary",
                 "n_records": len(cohort.records), "groups": {}}
    for group in GROUPS:
        grp = filter_group(cohort, group)
        n = len(grp.records)
        entry: dict = {"n": n, "fraction": n / len(cohort.records)}
        if n:
            for endpoint in ("mortality", "morbidity", "poor"):
                entry[endpoint] = float(grp.labels(endpoint).mean())
            features: dict = {}
            for f in grp.codebook:
                if group != "ALL" and not f.applies_to(group):
                    continue
                vals = [r.values[f.name] for r in grp.records if f.name in r.values]
                if not vals:
                    continue
                if f.kind == "binary":
                    features[f.name] = {"kind": f.kind, "n": len(vals),
                                        "count": int(sum(vals)),
                                        "rate": float(sum(vals) / len(vals))}
                else:
                    d = describe(np.asarray(vals, dtype=float))
                    features[f.name] = {"kind": f.kind, "n": d.n, "mean": d.mean,
                                        "sd": d.sd, "median": d.median,
                                        "q1": d.q1, "q3": d.q3,
                                        "min": d.minimum, "max": d.maximum}
            entry["features"] = features
        out["groups"][group] = entry
    return out
