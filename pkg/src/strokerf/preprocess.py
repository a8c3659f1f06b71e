"""Feature scoring and selection, class balancing, folds, and imputation.

Everything here is a pure function of its inputs and a seed, so repetitions
of a resampling plan can run concurrently and still reproduce bit-identical
results in any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from strokerf.dataset.cohort import Cohort
from strokerf.stats import welch_t


@dataclass(frozen=True)
class SelectionReport:
    """Per-feature t-filter scores plus the ranking they induce.

    ``scores`` maps feature name to (abs_t, p).  ``ranking`` is sorted by
    abs_t descending with ties broken by codebook order.  ``selected`` is
    filled in once a cutoff has been applied.
    """

    scores: dict[str, tuple[float, float]]
    ranking: tuple[str, ...]
    selected: tuple[str, ...] = ()
    cutoff_rule: dict | None = None

    def __post_init__(self) -> None:
        if set(self.ranking) != set(self.scores):
            raise ValueError("ranking must contain exactly the scored features")
        if not set(self.selected) <= set(self.ranking):
            raise ValueError("selected features must be a subset of the ranking")

    def to_json(self) -> dict:
        return {
            "scores": {k: [v[0], v[1]] for k, v in self.scores.items()},
            "ranking": list(self.ranking),
            "selected": list(self.selected),
            "cutoff_rule": self.cutoff_rule,
        }


def score_features_ttest(cohort: Cohort, target: str,
                         feature_names: tuple[str, ...] | None = None) -> SelectionReport:
    """Rank features by |t| of a two-sample Welch test between outcome classes.

    Binary features are scored on their 0/1 encoding with the same statistic.
    A feature that cannot separate the classes at all (constant, or fewer
    than 2 non-missing values in either class) scores (0.0, 1.0) and ranks
    last in codebook order.
    """
    labels = cohort.labels(target)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos < 2 or n_neg < 2:
        raise ValueError(
            f"need at least 2 records per outcome class, got {n_pos} positive / {n_neg} negative")
    mat, names = cohort.feature_matrix(feature_names)
    scores: dict[str, tuple[float, float]] = {}
    scored_any = False
    for j, name in enumerate(names):
        col = mat[:, j]
        ok = ~np.isnan(col)
        a = col[ok & (labels == 1)]
        b = col[ok & (labels == 0)]
        if a.size < 2 or b.size < 2:
            scores[name] = (0.0, 1.0)
            continue
        try:
            res = welch_t(a, b)
        except ValueError:  # both classes constant at the same value
            scores[name] = (0.0, 1.0)
            continue
        scored_any = True
        scores[name] = (abs(res.statistic), res.p_value)
    if not scored_any:
        raise ValueError("no feature has 2 non-missing values in both outcome classes")
    order = sorted(range(len(names)), key=lambda j: (-scores[names[j]][0], j))
    ranking = tuple(names[j] for j in order)
    return SelectionReport(scores=scores, ranking=ranking)


def select_top_k(report: SelectionReport, k: int = 7) -> tuple[str, ...]:
    """First k features of the ranking (all of them when k exceeds the count)."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    return report.ranking[:k]


def apply_top_k(report: SelectionReport, k: int = 7) -> SelectionReport:
    """Copy of ``report`` with the top-k cutoff recorded."""
    return replace(report, selected=select_top_k(report, k),
                   cutoff_rule={"rule": "top_k", "k": k})


def _undersample_indices(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if pos.size == 0 or neg.size == 0:
        raise ValueError(
            f"undersampling needs both classes, got {pos.size} positive / {neg.size} negative")
    minority, majority = (pos, neg) if pos.size <= neg.size else (neg, pos)
    kept = rng.choice(majority, size=minority.size, replace=False)
    out = np.concatenate([minority, kept])
    rng.shuffle(out)
    return out


def undersample(cohort: Cohort, target: str, seed) -> Cohort:
    """Balance classes by dropping random majority records; order re-randomized."""
    labels = cohort.labels(target)
    rng = np.random.default_rng(seed)
    return cohort.subset(_undersample_indices(labels, rng))


@dataclass(frozen=True)
class FoldAssignment:
    """Maps each record index to a fold id in [0, k)."""

    fold_of: np.ndarray
    k: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"need at least 2 folds, got {self.k}")
        if self.fold_of.size and (self.fold_of.min() < 0 or self.fold_of.max() >= self.k):
            raise ValueError("fold ids must lie in [0, k)")

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)


def stratified_kfold(labels, k: int, seed) -> FoldAssignment:
    """Per-class shuffled round-robin assignment.

    The second class starts its round-robin where the first class' remainder
    ended, so total fold sizes also differ by at most 1.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if pos.size + neg.size != labels.size:
        raise ValueError("labels must be 0/1")
    if min(pos.size, neg.size) < k:
        raise ValueError(
            f"every class needs at least k={k} members, got {pos.size} positive / {neg.size} negative")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.int64)
    for i, r in enumerate(rng.permutation(pos)):
        fold_of[r] = i % k
    offset = pos.size % k
    for i, r in enumerate(rng.permutation(neg)):
        fold_of[r] = (offset + i) % k
    return FoldAssignment(fold_of, k)


def kfold(n: int, k: int, seed) -> FoldAssignment:
    """Unstratified shuffled round-robin split (fold sizes differ by <= 1)."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} records, got {n}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    for i, r in enumerate(rng.permutation(n)):
        fold_of[r] = i % k
    return FoldAssignment(fold_of, k)


def impute_missing(train: Cohort, apply_to: Cohort,
                   feature_names: tuple[str, ...] | None = None) -> Cohort:
    """Fill missing values using training-set statistics only.

    Continuous and ordinal features are filled with the training median,
    binary features with the training mode (ties resolve to 0).  By default
    the features considered are those applicable to the stroke types present
    in the training records.  A feature that needs filling but has no
    training values at all is an error.
    """
    codebook = train.codebook
    if feature_names is None:
        seen = {r.stroke_type for r in train.records}
        names: list[str] = []
        for f in codebook:
            if any(t in f.groups for t in seen):
                names.append(f.name)
        feature_names = tuple(names)
    fills: dict[str, float] = {}
    for name in feature_names:
        f = codebook.get(name)
        vals = [r.values[name] for r in train.records if name in r.values]
        if not vals:
            if any(name not in r.values for r in apply_to.records):
                raise ValueError(
                    f"cannot impute feature {name!r}: no non-missing training values")
            continue
        if f.kind == "binary":
            fills[name] = 1.0 if 2 * sum(vals) > len(vals) else 0.0
        else:
            fills[name] = float(np.median(np.asarray(vals)))
    out = []
    for rec in apply_to.records:
        missing = [n for n in feature_names if n not in rec.values and n in fills]
        if not missing:
            out.append(rec)
            continue
        vals = dict(rec.values)
        for n in missing:
            vals[n] = fills[n]
        out.append(replace(rec, values=vals))
    return Cohort(out, apply_to.codebook, validate=False)


@dataclass(frozen=True)
class ResamplePlan:
    """Derived per-repetition seeds for shuffle, undersample, and folds.

    The heavy parts (index sets, fold assignments) are materialized lazily
    per repetition from the stored child seed, so the plan itself stays
    cheap to build and serialize while remaining a pure function of the
    master seed.
    """

    master_seed: int
    repetitions: int
    k: int
    repetition_seeds: tuple[int, ...]

    def materialize(self, rep: int, labels, *,
                    stratify: bool = True) -> tuple[np.ndarray, FoldAssignment]:
        """Row indices after shuffle + undersample, plus their fold assignment."""
        if not 0 <= rep < self.repetitions:
            raise ValueError(f"repetition index {rep} outside [0, {self.repetitions})")
        labels = np.asarray(labels)
        child = self.repetition_seeds[rep]
        perm = np.random.default_rng(np.random.SeedSequence((child, 0))).permutation(labels.size)
        keep = _undersample_indices(labels[perm],
                                    np.random.default_rng(np.random.SeedSequence((child, 1))))
        rows = perm[keep]
        fold_seed = np.random.SeedSequence((child, 2))
        if stratify:
            folds = stratified_kfold(labels[rows], self.k, fold_seed)
        else:
            folds = kfold(rows.size, self.k, fold_seed)
        return rows, folds

    def to_json(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "repetitions": self.repetitions,
            "k": self.k,
            "repetition_seeds": list(self.repetition_seeds),
        }


def build_resample_plan(master_seed: int, repetitions: int = 100, k: int = 10) -> ResamplePlan:
    if repetitions < 1:
        raise ValueError(f"need at least 1 repetition, got {repetitions}")
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    seeds = tuple(
        int(np.random.SeedSequence((master_seed, r)).generate_state(1, np.uint64)[0])
        for r in range(repetitions))
    if len(set(seeds)) != repetitions:
        raise RuntimeError("derived repetition seeds collide; change the master seed")
    return ResamplePlan(master_seed=master_seed, repetitions=repetitions, k=k,
                        repetition_seeds=seeds)
