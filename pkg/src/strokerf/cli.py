"""Command-line entry points.

Subcommands cover the full workflow: generate a synthetic cohort, run a
prediction problem, export a decision-surface grid, compare finished
reports, and summarize a cohort descriptively.  Every output lands under
--out-dir with a fixed name so runs are easy to script.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from strokerf.dataset.cohort import load_cohort_csv, save_cohort_csv, apply_exclusions
from strokerf.dataset.generator import (
    CohortSpec,
    default_cohort_spec,
    generate_synthetic_cohort,
)
from strokerf.experiment import (
    ENDPOINT_CHOICES,
    MORBIDITY_POPULATIONS,
    REPORT_SCHEMA_VERSION,
    SELECTION_SCOPES,
    ExperimentPlan,
    aggregate,
    compare_groups,
    heatmap_grid,
    run_problem,
    summarize_cohort,
    write_heatmap_csv,
    write_importance_csv,
    write_report,
)
from strokerf.forest import (
    ForestConfig,
    default_mtry,
    load_forest,
    save_forest,
    train_forest,
)
from strokerf.dataset.codebook import GROUPS
from strokerf.preprocess import impute_missing, score_features_ttest, select_top_k, undersample
from strokerf.serialize import read_json, write_canonical_json


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_generate(args) -> int:
    if args.config is not None:
        spec = CohortSpec.from_json(Path(args.config).read_text())
    else:
        spec = default_cohort_spec(n_total=args.n)
    cohort = generate_synthetic_cohort(spec, args.seed)
    cohort, log = apply_exclusions(cohort)
    path = _out_dir(args) / "cohort.csv"
    save_cohort_csv(cohort, path)
    print(f"wrote {path} ({log.n_retained} records; "
          f"excluded {log.n_died_first_24h} early deaths, "
          f"{log.n_lost_followup} lost to follow-up)")
    return 0


def _plan_from_args(args) -> ExperimentPlan:
    return ExperimentPlan(
        group=args.group,
        endpoint=args.endpoint,
        repetitions=args.reps,
        folds=args.folds,
        k_features=args.k_features,
        n_trees=args.trees,
        master_seed=args.seed,
        selection_scope=args.selection_scope,
        morbidity_population=args.morbidity_population,
    )


def _representative_forest(cohort, plan: ExperimentPlan, n_trees: int):
    """One forest on a balanced, imputed draw of the whole problem cohort."""
    from strokerf.experiment import _problem_cohort, _problem_seed, _TUNE_STREAM_TAG
    import numpy as np

    grp = _problem_cohort(cohort, plan)
    seed = _problem_seed(plan)
    sub = undersample(grp, plan.endpoint, np.random.SeedSequence((seed, _TUNE_STREAM_TAG)))
    sub = impute_missing(sub, sub)
    selected = tuple(select_top_k(score_features_ttest(sub, plan.endpoint),
                                  plan.k_features))
    X, _ = sub.feature_matrix(selected)
    y = sub.labels(plan.endpoint)
    cfg = ForestConfig(n_trees=n_trees, mtry=default_mtry(len(selected)), seed=seed)
    return train_forest(X, y, selected, cfg)


def _cmd_run(args) -> int:
    if args.config is not None:
        plan = ExperimentPlan.from_json(read_json(args.config))
    else:
        plan = _plan_from_args(args)
    cohort = load_cohort_csv(args.cohort)
    result = run_problem(cohort, plan, workers=args.workers)
    out = _out_dir(args)
    written = write_report(result, out)
    report = aggregate(result)
    importance_path = out / "importance.csv"
    write_importance_csv(report, importance_path)
    written.append(str(importance_path))
    if args.save_forest:
        forest = _representative_forest(cohort, plan, result.tuned_n_trees)
        forest_path = out / "forest.json"
        save_forest(forest, forest_path)
        written.append(str(forest_path))
    for path in written:
        print(f"wrote {path}")
    print(f"mean auc {report.mean_auc:.4f} (sd {report.sd_auc:.4f}) "
          f"over {report.n_entries} fold runs")
    return 0


def _cmd_heatmap(args) -> int:
    forest = load_forest(args.forest)
    cohort = load_cohort_csv(args.cohort)
    grid = heatmap_grid(forest, cohort, args.x, args.y, args.resolution,
                        target=args.target)
    path = _out_dir(args) / "heatmap.csv"
    write_heatmap_csv(grid, path)
    print(f"wrote {path} ({len(grid.misclassified)} misclassified records annotated)")
    return 0


def _cmd_compare(args) -> int:
    samples = {}
    for path in args.reports:
        doc = read_json(path)
        if doc.get("kind") != "experiment_report":
            raise ValueError(f"{path} is not an experiment report")
        name = f"{doc['plan']['group']}_{doc['plan']['endpoint']}"
        while name in samples:
            name += "_dup"
        samples[name] = doc["aggregate"]["auc_values"]
    out = compare_groups(samples)
    out["schema_version"] = REPORT_SCHEMA_VERSION
    path = _out_dir(args) / "compare.json"
    write_canonical_json(out, path)
    print(f"wrote {path}")
    return 0


def _cmd_summarize(args) -> int:
    cohort = load_cohort_csv(args.cohort)
    path = _out_dir(args) / "summary.json"
    write_canonical_json(summarize_cohort(cohort), path)
    print(f"wrote {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strokerf",
        description="Random-forest stroke outcome prediction workflow.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="master random seed")
        p.add_argument("--out-dir", default=".", help="directory for outputs")

    g = sub.add_parser("generate", help="synthesize a cohort CSV")
    common(g)
    g.add_argument("--config", help="cohort spec JSON (overrides --n)")
    g.add_argument("--n", type=int, default=6022, help="cohort size for the default spec")
    g.set_defaults(func=_cmd_generate)

    r = sub.add_parser("run", help="run one prediction problem")
    common(r)
    r.add_argument("cohort", help="cohort CSV path")
    r.add_argument("--config", help="experiment plan JSON (overrides plan flags)")
    r.add_argument("--group", choices=GROUPS, default="ALL")
    r.add_argument("--endpoint", choices=ENDPOINT_CHOICES, default="mortality")
    r.add_argument("--reps", type=int, default=100)
    r.add_argument("--folds", type=int, default=10)
    r.add_argument("--k-features", type=int, default=7)
    r.add_argument("--trees", type=int, default=None,
                   help="fixed tree count; omit to tune over 500..1000")
    r.add_argument("--selection-scope", choices=SELECTION_SCOPES, default="per-fold")
    r.add_argument("--morbidity-population", choices=MORBIDITY_POPULATIONS,
                   default="exclude-deaths")
    r.add_argument("--workers", type=int, default=1, help="repetition threads")
    r.add_argument("--save-forest", action="store_true",
                   help="also train and save one whole-cohort forest")
    r.set_defaults(func=_cmd_run)

    h = sub.add_parser("heatmap", help="prediction surface over two features")
    common(h)
    h.add_argument("forest", help="forest JSON path")
    h.add_argument("cohort", help="cohort CSV path")
    h.add_argument("--x", required=True, help="x-axis feature name")
    h.add_argument("--y", required=True, help="y-axis feature name")
    h.add_argument("--resolution", type=int, default=50)
    h.add_argument("--target", choices=("mortality", "morbidity", "poor"),
                   default="mortality", help="endpoint for the annotations")
    h.set_defaults(func=_cmd_heatmap)

    c = sub.add_parser("compare", help="test AUC differences between reports")
    common(c)
    c.add_argument("reports", nargs="+", help="two or more report JSON paths")
    c.set_defaults(func=_cmd_compare)

    s = sub.add_parser("summarize", help="descriptive cohort tables as JSON")
    common(s)
    s.add_argument("cohort", help="cohort CSV path")
    s.set_defaults(func=_cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
