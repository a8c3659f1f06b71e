"""Patient records, outcome labels, and the cohort CSV interface.

A cohort is a codebook plus an ordered list of records.  Feature values live
in a per-record dict keyed by codebook name; a feature absent from the dict
is missing.  The CSV interface is strict: one column per codebook feature
plus the four metadata columns, empty string for missing, and errors that
name the offending row and column.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from strokerf.dataset.codebook import (
    GROUP_ALL,
    GROUP_ICH,
    GROUP_IS,
    GROUPS,
    FeatureCodebook,
    FeatureDef,
    default_codebook,
)

STROKE_TYPES = (GROUP_IS, GROUP_ICH)
META_COLUMNS = ("mrs_3m", "stroke_type", "died_first_24h", "lost_followup")
ENDPOINTS = ("mortality", "morbidity", "poor")

# mRS sub-level thresholds behind the endpoint definitions
_POOR_MIN_MRS = 3
_DEATH_MRS = 6
_ED_RISE_POINTS = 4.0
_REPERFUSION_MAX_NIHSS = 8.0


@dataclass(frozen=True)
class OutcomeLabel:
    """3-month functional outcome flags derived from the mRS score."""

    poor: bool
    morbidity: bool
    mortality: bool

    def __post_init__(self) -> None:
        if self.mortality and not self.poor:
            raise ValueError("mortality implies poor outcome")
        if self.morbidity and not self.poor:
            raise ValueError("morbidity implies poor outcome")
        if self.morbidity and self.mortality:
            raise ValueError("morbidity and mortality are mutually exclusive")


def derive_outcome(mrs_3m: int | None) -> OutcomeLabel:
    """Labels from the 3-month mRS: poor > 2, morbidity 3..5, death 6."""
    if mrs_3m is None:
        raise ValueError("cannot derive outcome: mRS at 3 months is missing")
    if not 0 <= int(mrs_3m) <= 6:
        raise ValueError(f"mRS must lie in 0..6, got {mrs_3m!r}")
    mrs = int(mrs_3m)
    return OutcomeLabel(
        poor=mrs >= _POOR_MIN_MRS,
        morbidity=_POOR_MIN_MRS <= mrs < _DEATH_MRS,
        mortality=mrs == _DEATH_MRS,
    )


@dataclass
class PatientRecord:
    stroke_type: str
    mrs_3m: int | None = None
    values: dict[str, float] = field(default_factory=dict)
    died_first_24h: bool = False
    lost_followup: bool = False

    def __post_init__(self) -> None:
        if self.stroke_type not in STROKE_TYPES:
            raise ValueError(f"stroke_type must be IS or ICH, got {self.stroke_type!r}")
        if self.mrs_3m is not None and not 0 <= int(self.mrs_3m) <= 6:
            raise ValueError(f"mRS must lie in 0..6, got {self.mrs_3m!r}")

    def get(self, name: str) -> float | None:
        return self.values.get(name)

    @property
    def nihss_admission(self) -> float | None:
        return self.values.get("nihss_admission")

    @property
    def nihss_24h(self) -> float | None:
        return self.values.get("nihss_24h")

    @property
    def nihss_48h(self) -> float | None:
        return self.values.get("nihss_48h")

    @property
    def temperature_admission(self) -> float | None:
        return self.values.get("temperature_admission")

    @property
    def glucose_admission(self) -> float | None:
        return self.values.get("glucose_admission")

    @property
    def leukocyte_count_admission(self) -> float | None:
        return self.values.get("leukocyte_count_admission")

    def outcome(self) -> OutcomeLabel:
        return derive_outcome(self.mrs_3m)


def early_deterioration_value(record: PatientRecord) -> float | None:
    """1.0 if the NIHSS rose >= 4 points within 48 h of the admission score.

    Missing admission score, or no follow-up score at all, leaves the flag
    undetermined (None).
    """
    n0 = record.values.get("nihss_admission")
    if n0 is None:
        return None
    rises = [record.values[k] - n0 for k in ("nihss_24h", "nihss_48h") if k in record.values]
    if not rises:
        return None
    return 1.0 if max(rises) >= _ED_RISE_POINTS else 0.0


def effective_reperfusion(record: PatientRecord) -> bool | None:
    """Reperfusion considered effective when the 24 h NIHSS is <= 8."""
    n24 = record.values.get("nihss_24h")
    if n24 is None:
        return None
    return n24 <= _REPERFUSION_MAX_NIHSS


def abc2_volume(a: float, b: float, c: float) -> float:
    """Ellipsoid volume estimate from three orthogonal diameters: a*b*c/2."""
    if a <= 0 or b <= 0 or c <= 0:
        raise ValueError(f"all three diameters must be positive, got {(a, b, c)!r}")
    return a * b * c / 2.0


def _check_value(f: FeatureDef, v: float) -> str | None:
    """Domain check for one feature value; returns an error message or None."""
    if not math.isfinite(v):
        return f"value must be finite, got {v!r}"
    if f.kind == "binary":
        if v not in (0.0, 1.0):
            return f"binary feature must be 0 or 1, got {v!r}"
    elif f.name.startswith("nihss_"):
        if not 0.0 <= v <= 42.0:
            return f"NIHSS score must lie in 0..42, got {v!r}"
    elif f.name == "prestroke_mrs":
        if not 0.0 <= v <= 5.0:
            return f"pre-stroke mRS must lie in 0..5, got {v!r}"
    elif f.kind in ("continuous", "ordinal"):
        if v < 0.0:
            return f"value must be non-negative, got {v!r}"
    return None


class Cohort:
    """Codebook plus records, with matrix/label views for modeling."""

    def __init__(self, records: list[PatientRecord], codebook: FeatureCodebook | None = None,
                 *, validate: bool = True):
        self.codebook = codebook if codebook is not None else default_codebook()
        self.records = list(records)
        if validate:
            self._validate()

    def _validate(self) -> None:
        for i, rec in enumerate(self.records):
            for name, v in rec.values.items():
                if name not in self.codebook:
                    raise ValueError(f"record {i}: unknown feature {name!r}")
                msg = _check_value(self.codebook.get(name), v)
                if msg:
                    raise ValueError(f"record {i}: feature {name!r}: {msg}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def subset(self, indices) -> "Cohort":
        recs = [self.records[int(i)] for i in indices]
        return Cohort(recs, self.codebook, validate=False)

    def stroke_types(self) -> np.ndarray:
        return np.array([r.stroke_type for r in self.records])

    def labels(self, endpoint: str) -> np.ndarray:
        """0/1 vector for ``endpoint`` ("mortality", "morbidity" or "poor")."""
        if endpoint not in ENDPOINTS:
            raise ValueError(f"unknown endpoint {endpoint!r}, expected one of {ENDPOINTS}")
        out = np.zeros(len(self.records), dtype=np.uint8)
        for i, rec in enumerate(self.records):
            lab = derive_outcome(rec.mrs_3m)
            out[i] = getattr(lab, "poor" if endpoint == "poor" else endpoint)
        return out

    def feature_matrix(self, names: tuple[str, ...] | None = None) -> tuple[np.ndarray, tuple[str, ...]]:
        """(n_records, n_features) float matrix with NaN in missing cells."""
        if names is None:
            names = self.codebook.names()
        for name in names:
            f = self.codebook.get(name)
            if f.kind == "categorical":
                raise ValueError(
                    f"feature {name!r} is categorical; expand it to indicator "
                    "columns in the codebook before building a matrix")
        mat = np.full((len(self.records), len(names)), np.nan)
        for i, rec in enumerate(self.records):
            vals = rec.values
            for j, name in enumerate(names):
                v = vals.get(name)
                if v is not None:
                    mat[i, j] = v
        return mat, tuple(names)


@dataclass(frozen=True)
class ExclusionLog:
    n_input: int
    n_died_first_24h: int
    n_lost_followup: int
    n_retained: int


def apply_exclusions(cohort: Cohort) -> tuple[Cohort, ExclusionLog]:
    """Drop first-24h deaths, then records lost to follow-up.

    A record with both flags counts once, as an early death.
    """
    kept: list[PatientRecord] = []
    n_died = n_lost = 0
    for rec in cohort.records:
        if rec.died_first_24h:
            n_died += 1
        elif rec.lost_followup:
            n_lost += 1
        else:
            kept.append(rec)
    log = ExclusionLog(len(cohort.records), n_died, n_lost, len(kept))
    return Cohort(kept, cohort.codebook, validate=False), log


def filter_group(cohort: Cohort, group: str) -> Cohort:
    """Restrict to one stroke type and blank out inapplicable features.

    ``group="ALL"`` keeps every record untouched.
    """
    if group not in GROUPS:
        raise ValueError(f"unknown group {group!r}, expected one of {GROUPS}")
    if group == GROUP_ALL:
        return Cohort(list(cohort.records), cohort.codebook, validate=False)
    applicable = set(cohort.codebook.applicable(group))
    kept = []
    for rec in cohort.records:
        if rec.stroke_type != group:
            continue
        vals = {k: v for k, v in rec.values.items() if k in applicable}
        if len(vals) == len(rec.values):
            kept.append(rec)
        else:
            kept.append(replace(rec, values=vals))
    return Cohort(kept, cohort.codebook, validate=False)


def derive_clinical_flags(cohort: Cohort) -> Cohort:
    """Fill the early-deterioration feature where it is absent but derivable."""
    out: list[PatientRecord] = []
    for rec in cohort.records:
        if "early_neuro_deterioration" in rec.values:
            out.append(rec)
            continue
        ed = early_deterioration_value(rec)
        if ed is None:
            out.append(rec)
        else:
            vals = dict(rec.values)
            vals["early_neuro_deterioration"] = ed
            out.append(replace(rec, values=vals))
    return Cohort(out, cohort.codebook, validate=False)


# ======================================================================
# CSV interface
# ======================================================================

def _format_value(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def save_cohort_csv(cohort: Cohort, path) -> None:
    """Write the cohort in canonical column order (codebook, then metadata)."""
    names = cohort.codebook.names()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + list(META_COLUMNS))
        for rec in cohort.records:
            row = []
            for name in names:
                v = rec.values.get(name)
                row.append("" if v is None else _format_value(v))
            row.append("" if rec.mrs_3m is None else str(int(rec.mrs_3m)))
            row.append(rec.stroke_type)
            row.append("1" if rec.died_first_24h else "0")
            row.append("1" if rec.lost_followup else "0")
            w.writerow(row)


def load_cohort_csv(path, codebook: FeatureCodebook | None = None) -> Cohort:
    """Parse a cohort CSV, validating the header and every cell.

    Errors name the offending row (1-based, excluding the header) and column.
    """
    codebook = codebook if codebook is not None else default_codebook()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty file: no header row") from None
        expected = set(codebook.names()) | set(META_COLUMNS)
        seen = set()
        for col in header:
            if col not in expected:
                raise ValueError(f"unknown column {col!r} in header")
            if col in seen:
                raise ValueError(f"duplicate column {col!r} in header")
            seen.add(col)
        missing_cols = expected - seen
        if missing_cols:
            raise ValueError(f"missing columns: {sorted(missing_cols)}")
        col_of = {name: i for i, name in enumerate(header)}

        records: list[PatientRecord] = []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValueError(f"row {rownum}: expected {len(header)} fields, got {len(row)}")

            def cell(name: str) -> str:
                return row[col_of[name]].strip()

            stroke_type = cell("stroke_type")
            if stroke_type not in STROKE_TYPES:
                raise ValueError(
                    f"row {rownum}: column 'stroke_type': expected IS or ICH, got {stroke_type!r}")
            raw_mrs = cell("mrs_3m")
            mrs: int | None = None
            if raw_mrs:
                try:
                    mrs = int(raw_mrs)
                except ValueError:
                    raise ValueError(f"row {rownum}: column 'mrs_3m': not an integer: {raw_mrs!r}") from None
                if not 0 <= mrs <= 6:
                    raise ValueError(f"row {rownum}: column 'mrs_3m': mRS must lie in 0..6, got {mrs}")
            flags = {}
            for name in ("died_first_24h", "lost_followup"):
                raw = cell(name)
                if raw not in ("0", "1"):
                    raise ValueError(f"row {rownum}: column {name!r}: expected 0 or 1, got {raw!r}")
                flags[name] = raw == "1"

            values: dict[str, float] = {}
            for f in codebook:
                raw = cell(f.name)
                if raw == "":
                    continue
                try:
                    v = float(raw)
                except ValueError:
                    raise ValueError(
                        f"row {rownum}: column {f.name!r}: not a number: {raw!r}") from None
                msg = _check_value(f, v)
                if msg:
                    raise ValueError(f"row {rownum}: column {f.name!r}: {msg}")
                values[f.name] = v

            records.append(PatientRecord(
                stroke_type=stroke_type,
                mrs_3m=mrs,
                values=values,
                died_first_24h=flags["died_first_24h"],
                lost_followup=flags["lost_followup"],
            ))
    return Cohort(records, codebook, validate=False)
