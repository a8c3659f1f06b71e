from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from strokerf.dataset import default_codebook
from strokerf.dataset.cohort import apply_exclusions, early_deterioration_value, save_cohort_csv
from strokerf.dataset.generator import (
    CohortSpec,
    QuartileParam,
    default_cohort_spec,
    generate_synthetic_cohort,
)


@pytest.fixture(scope="module")
def cohort6022():
    return generate_synthetic_cohort(default_cohort_spec(), 42)


def test_group_sizes_match_fractions(cohort6022) -> None:
    types = cohort6022.stroke_types()
    assert len(cohort6022) == 6022
    assert int((types == "IS").sum()) == 4922
    assert int((types == "ICH").sum()) == 1100


def test_identical_spec_and_seed_serialize_byte_identically(tmp_path) -> None:
    spec = default_cohort_spec(n_total=400)
    a = generate_synthetic_cohort(spec, 9)
    b = generate_synthetic_cohort(spec, 9)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    save_cohort_csv(a, pa)
    save_cohort_csv(b, pb)
    assert pa.read_bytes() == pb.read_bytes()
    c = generate_synthetic_cohort(spec, 10)
    pc = tmp_path / "c.csv"
    save_cohort_csv(c, pc)
    assert pa.read_bytes() != pc.read_bytes()


def test_continuous_marginals_hit_spec_means(cohort6022) -> None:
    spec = default_cohort_spec()
    mat, names = cohort6022.feature_matrix()
    col = {n: i for i, n in enumerate(names)}
    types = cohort6022.stroke_types()
    for gname, g in spec.groups.items():
        mask = types == gname
        n = int(mask.sum())
        for fname, p in g.continuous.items():
            vals = mat[mask, col[fname]]
            vals = vals[~np.isnan(vals)]
            assert vals.size == n, fname
            tol = 4.0 * p.sd / math.sqrt(n)
            assert abs(float(vals.mean()) - p.mean) < tol, (gname, fname)


def test_binary_marginals_hit_spec_prevalences(cohort6022) -> None:
    spec = default_cohort_spec()
    mat, names = cohort6022.feature_matrix()
    col = {n: i for i, n in enumerate(names)}
    types = cohort6022.stroke_types()
    for gname, g in spec.groups.items():
        mask = types == gname
        n = int(mask.sum())
        targets = dict(g.binary)
        for block in g.exclusive:
            targets.update(block)
        for fname, p in targets.items():
            vals = mat[mask, col[fname]]
            tol = 4.0 * math.sqrt(p * (1.0 - p) / n)
            assert abs(float(np.nanmean(vals)) - p) < tol, (gname, fname)


def test_exclusive_blocks_are_mutually_exclusive(cohort6022) -> None:
    mat, names = cohort6022.feature_matrix()
    col = {n: i for i, n in enumerate(names)}
    types = cohort6022.stroke_types()
    subtype = [f"infarct_{s}" for s in
               ("atherothrombotic", "cardioembolic", "lacunar", "undetermined", "other_cause")]
    sub = mat[np.ix_(types == "IS", [col[n] for n in subtype])]
    assert np.all(sub.sum(axis=1) == 1.0)  # subtype classification always assigned
    ht = [f"hemorrhagic_transformation_{s}" for s in ("ih1", "ih2", "ph1", "ph2")]
    htm = mat[np.ix_(types == "IS", [col[n] for n in ht])]
    assert np.all(htm.sum(axis=1) <= 1.0)  # transformation may be absent


def test_outcome_prevalences_near_targets(cohort6022) -> None:
    mort = cohort6022.labels("mortality")
    morb = cohort6022.labels("morbidity")
    assert abs(float(mort.mean()) - 0.163) < 0.015
    assert abs(float(morb.mean()) - 0.350) < 0.015
    types = cohort6022.stroke_types()
    assert abs(float(mort[types == "IS"].mean()) - 0.132) < 0.02
    assert abs(float(mort[types == "ICH"].mean()) - 0.302) < 0.055  # n=1100, 4 sigma


def test_nihss_quartiles_approximate_targets(cohort6022) -> None:
    spec = default_cohort_spec()
    mat, names = cohort6022.feature_matrix()
    col = {n: i for i, n in enumerate(names)}
    types = cohort6022.stroke_types()
    for gname, g in spec.groups.items():
        mask = types == gname
        for fname in ("nihss_admission", "nihss_24h", "nihss_48h"):
            p: QuartileParam = g.scores[fname]
            q1, med, q3 = np.percentile(mat[mask, col[fname]], [25, 50, 75])
            slack = 1.0 if fname == "nihss_admission" else 2.5
            assert abs(med - p.median) <= slack, (gname, fname, med)
            assert abs(q1 - p.q1) <= slack, (gname, fname, q1)
            assert abs(q3 - p.q3) <= slack, (gname, fname, q3)


def test_early_deterioration_consistent_with_trajectory(cohort6022) -> None:
    for rec in cohort6022.records[::7]:
        stored = rec.values["early_neuro_deterioration"]
        assert stored == early_deterioration_value(rec)


def test_early_deterioration_rates(cohort6022) -> None:
    mat, names = cohort6022.feature_matrix()
    col = {n: i for i, n in enumerate(names)}
    types = cohort6022.stroke_types()
    ed = mat[:, col["early_neuro_deterioration"]]
    assert abs(float(ed[types == "IS"].mean()) - 0.058) < 0.015
    assert abs(float(ed[types == "ICH"].mean()) - 0.165) < 0.05


def test_mrs_consistent_with_labels(cohort6022) -> None:
    mort = cohort6022.labels("mortality")
    morb = cohort6022.labels("morbidity")
    for i, rec in enumerate(cohort6022.records):
        if mort[i]:
            assert rec.mrs_3m == 6
        elif morb[i]:
            assert rec.mrs_3m in (3, 4, 5)
        else:
            assert rec.mrs_3m in (0, 1, 2)


def test_records_complete_for_applicable_features(cohort6022) -> None:
    cb = default_codebook()
    want_is = set(cb.applicable("IS"))
    want_ich = set(cb.applicable("ICH"))
    for rec in cohort6022.records[::11]:
        want = want_is if rec.stroke_type == "IS" else want_ich
        assert set(rec.values) == want


def test_registry_extras_flow_through_exclusions() -> None:
    spec = default_cohort_spec(n_total=1000, n_early_death=40, n_lost_followup=15)
    coh = generate_synthetic_cohort(spec, 3)
    assert len(coh) == 1055
    kept, log = apply_exclusions(coh)
    assert log.n_died_first_24h == 40
    assert log.n_lost_followup == 15
    assert len(kept) == 1000


def test_spec_json_roundtrip() -> None:
    spec = default_cohort_spec(n_total=500, n_early_death=7)
    back = CohortSpec.from_json(spec.to_json())
    assert back == spec


def test_spec_coverage_validation_catches_gaps() -> None:
    spec = default_cohort_spec()
    g = spec.groups["IS"]
    broken = dataclasses.replace(g, binary={k: v for k, v in g.binary.items() if k != "smoking"})
    bad = dataclasses.replace(spec, groups={"IS": broken, "ICH": spec.groups["ICH"]})
    with pytest.raises(ValueError, match="smoking"):
        generate_synthetic_cohort(bad, 1)


def test_spec_rejects_bad_fractions_and_rates() -> None:
    spec = default_cohort_spec()
    g = spec.groups["IS"]
    with pytest.raises(ValueError, match="fractions"):
        dataclasses.replace(spec, groups={"IS": dataclasses.replace(g, fraction=0.5),
                                          "ICH": spec.groups["ICH"]})
    with pytest.raises(ValueError, match="prevalence"):
        dataclasses.replace(spec, groups={"IS": dataclasses.replace(g, ed_rate=1.4),
                                          "ICH": spec.groups["ICH"]})
