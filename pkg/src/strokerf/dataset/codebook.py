"""Feature codebook for the acute stroke outcome dataset.

The codebook is the single source of truth for which variables exist, how they
are typed, and which stroke groups they apply to.  The default registry covers
65 variables collected in the first 48 h after admission: demographics and
history, clinical and neuroimaging findings, and molecular markers.
Multi-level classifications (infarct subtype, hemorrhage etiology, hematoma
topography, hemorrhagic transformation grade) are stored as indicator
features, one per level, so every default entry is numeric.
"""

from __future__ import annotations

from dataclasses import dataclass

KINDS = ("continuous", "binary", "ordinal", "categorical")

GROUP_IS = "IS"
GROUP_ICH = "ICH"
GROUP_ALL = "ALL"
GROUPS = (GROUP_ALL, GROUP_IS, GROUP_ICH)

_BOTH = (GROUP_IS, GROUP_ICH)


@dataclass(frozen=True)
class FeatureDef:
    """One codebook entry.

    ``groups`` lists the stroke types the feature is measurable for; a feature
    missing from a record's group is treated as structurally missing.
    """

    name: str
    kind: str
    units: str = ""
    groups: tuple[str, ...] = _BOTH
    shortlist: bool = False

    def __post_init__(self) -> None:
        if not self.name or not self.name.isidentifier():
            raise ValueError(f"feature name must be a valid identifier, got {self.name!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if not self.groups or any(g not in (GROUP_IS, GROUP_ICH) for g in self.groups):
            raise ValueError(f"groups for {self.name!r} must be a subset of {{IS, ICH}}")

    def applies_to(self, group: str) -> bool:
        if group == GROUP_ALL:
            return True
        return group in self.groups


class FeatureCodebook:
    """Ordered, name-unique collection of :class:`FeatureDef`.

    Codebook order is meaningful: it is the deterministic tie-breaker for
    feature ranking and the column order of the CSV interface.
    """

    def __init__(self, features: tuple[FeatureDef, ...] | list[FeatureDef]):
        features = tuple(features)
        if not features:
            raise ValueError("codebook must contain at least one feature")
        seen: set[str] = set()
        for f in features:
            if f.name in seen:
                raise ValueError(f"duplicate feature name {f.name!r}")
            seen.add(f.name)
        if not any(f.shortlist for f in features):
            raise ValueError("codebook must mark a shortlist (no feature has shortlist=True)")
        self._features = features
        self._index = {f.name: i for i, f in enumerate(features)}

    def __len__(self) -> int:
        return len(self._features)

    def __iter__(self):
        return iter(self._features)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def get(self, name: str) -> FeatureDef:
        try:
            return self._features[self._index[name]]
        except KeyError:
            raise KeyError(f"unknown feature {name!r}") from None

    def index(self, name: str) -> int:
        """Position of ``name`` in codebook order."""
        if name not in self._index:
            raise KeyError(f"unknown feature {name!r}")
        return self._index[name]

    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self._features)

    def shortlist(self) -> tuple[str, ...]:
        return tuple(f.name for f in self._features if f.shortlist)

    def applicable(self, group: str) -> tuple[str, ...]:
        """Names of features measurable for ``group`` ("ALL", "IS" or "ICH")."""
        if group not in GROUPS:
            raise ValueError(f"unknown group {group!r}, expected one of {GROUPS}")
        return tuple(f.name for f in self._features if f.applies_to(group))


def _cont(name: str, units: str = "", groups: tuple[str, ...] = _BOTH, shortlist: bool = False) -> FeatureDef:
    return FeatureDef(name, "continuous", units, groups, shortlist)


def _binary(name: str, groups: tuple[str, ...] = _BOTH, shortlist: bool = False) -> FeatureDef:
    return FeatureDef(name, "binary", "", groups, shortlist)


def _ordinal(name: str, units: str = "", shortlist: bool = False) -> FeatureDef:
    return FeatureDef(name, "ordinal", units, _BOTH, shortlist)


_DEFAULT_FEATURES: tuple[FeatureDef, ...] = (
    # demographics and history
    _cont("age", "years"),
    _binary("sex_female"),
    _binary("hypertension"),
    _binary("diabetes"),
    _binary("alcohol_abuse"),
    _binary("smoking"),
    _binary("dyslipidemia"),
    _binary("peripheral_artery_disease"),
    _binary("ischemic_heart_disease"),
    _binary("atrial_fibrillation"),
    _binary("prior_tia"),
    _binary("prior_ischemic_stroke"),
    _binary("prior_hemorrhagic_stroke"),
    _binary("anticoagulant_use"),
    _binary("antiplatelet_use"),
    # clinical course
    _binary("stroke_on_awakening"),
    _ordinal("prestroke_mrs", "score"),
    _cont("onset_to_admission_min", "min"),
    _ordinal("nihss_admission", "score", shortlist=True),
    _ordinal("nihss_24h", "score", shortlist=True),
    _ordinal("nihss_48h", "score", shortlist=True),
    _binary("early_neuro_deterioration", shortlist=True),
    # ischemic-stroke-only findings
    _binary("infarct_atherothrombotic", (GROUP_IS,)),
    _binary("infarct_cardioembolic", (GROUP_IS,)),
    _binary("infarct_lacunar", (GROUP_IS,)),
    _binary("infarct_undetermined", (GROUP_IS,)),
    _binary("infarct_other_cause", (GROUP_IS,)),
    _binary("iv_thrombolysis", (GROUP_IS,)),
    _binary("mechanical_thrombectomy", (GROUP_IS,)),
    _cont("dwi_lesion_volume_ml", "ml", (GROUP_IS,)),
    _cont("ct_lesion_volume_day4_7_ml", "ml", (GROUP_IS,)),
    _binary("hemorrhagic_transformation_ih1", (GROUP_IS,)),
    _binary("hemorrhagic_transformation_ih2", (GROUP_IS,)),
    _binary("hemorrhagic_transformation_ph1", (GROUP_IS,)),
    _binary("hemorrhagic_transformation_ph2", (GROUP_IS,)),
    # hemorrhage-only findings
    _binary("ich_hypertensive_etiology", (GROUP_ICH,)),
    _binary("ich_amyloid_etiology", (GROUP_ICH,)),
    _binary("ich_anticoagulant_etiology", (GROUP_ICH,)),
    _binary("ich_other_etiology", (GROUP_ICH,)),
    _cont("hematoma_volume_admission_ml", "ml", (GROUP_ICH,)),
    _cont("hematoma_volume_day4_7_ml", "ml", (GROUP_ICH,)),
    _cont("hematoma_total_volume_day4_7_ml", "ml", (GROUP_ICH,)),
    _cont("perihematomal_hypodensity_volume_ml", "ml", (GROUP_ICH,)),
    _cont("hematoma_growth_ml", "ml", (GROUP_ICH,)),
    _binary("hematoma_deep_location", (GROUP_ICH,)),
    _binary("hematoma_lobar_location", (GROUP_ICH,)),
    _binary("hematoma_cerebellar_location", (GROUP_ICH,)),
    _binary("hematoma_brainstem_location", (GROUP_ICH,)),
    _binary("hematoma_intraventricular_location", (GROUP_ICH,)),
    # vitals and chemistry at admission
    _cont("temperature_admission", "degC", shortlist=True),
    _cont("glucose_admission", "mg/dL", shortlist=True),
    _cont("esr_admission", "mm/h"),
    _cont("hba1c", "%"),
    _cont("ldl_cholesterol", "mg/dL"),
    _cont("hdl_cholesterol", "mg/dL"),
    _cont("triglycerides", "mg/dL"),
    _cont("platelet_count", "1e3/uL"),
    _cont("hemoglobin", "g/dL"),
    _cont("diastolic_bp_admission", "mmHg"),
    _cont("systolic_bp_admission", "mmHg"),
    # molecular markers
    _cont("leukocyte_count_admission", "1e3/uL", shortlist=True),
    _cont("fibrinogen", "mg/dL"),
    _cont("c_reactive_protein", "mg/dL"),
    _cont("microalbuminuria", "mg/24h"),
    _cont("nt_probnp", "pg/mL"),
)

_DEFAULT: FeatureCodebook | None = None


def default_codebook() -> FeatureCodebook:
    """The bundled 65-feature registry (shared instance)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = FeatureCodebook(_DEFAULT_FEATURES)
    return _DEFAULT
