"""Synthetic cohort generator calibrated to group-level marginals.

Produces cohorts that mimic the real registry at the distribution level:
per-group binary prevalences, truncated-normal continuous markers, ordinal
scores matched on quartiles, an NIHSS trajectory over 48 h whose worsening
branch drives the early-deterioration flag, and 3-month outcomes drawn from
two nested logistic links (death, then morbidity among survivors) whose
intercepts are solved by bisection so the expected prevalences hit the
targets.  Everything is driven by one numpy Generator, so a (spec, seed)
pair maps to exactly one cohort, byte for byte.

Notes on calibration:

* For strongly truncated features (e.g. lesion volumes with a zero floor and
  SD larger than the mean) the *location* of the underlying normal is solved
  so the truncated mean equals the target mean; the scale keeps the nominal
  SD, so the realized SD shrinks under heavy truncation.
* The morbidity link is calibrated against the expected-survivor weights
  (1 - p_death per record), making the expected unconditional morbidity
  fraction match the target without conditioning on the realized deaths.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from strokerf import stats
from strokerf.dataset.codebook import FeatureCodebook, default_codebook
from strokerf.dataset.cohort import Cohort, PatientRecord

SPEC_SCHEMA_VERSION = 1

_ED_RISE = 4.0

# mRS sub-level mix within each outcome class (good 0..2, morbidity 3..5)
_GOOD_MRS_PROBS = (0.34, 0.36, 0.30)
_MORBIDITY_MRS_PROBS = (0.38, 0.34, 0.28)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def _normal_pdf(x: float) -> float:
    return float(np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class ContinuousParam:
    """Truncated-normal marginal; ``decimals`` is the reporting precision."""

    mean: float
    sd: float
    lo: float
    hi: float
    decimals: int = 1

    def __post_init__(self) -> None:
        if self.sd <= 0:
            raise ValueError(f"sd must be positive, got {self.sd!r}")
        if not self.lo < self.mean < self.hi:
            raise ValueError(f"mean {self.mean!r} must lie inside ({self.lo!r}, {self.hi!r})")


@dataclass(frozen=True)
class QuartileParam:
    """Ordinal marginal matched on median and quartiles."""

    median: float
    q1: float
    q3: float
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.q1 <= self.median <= self.q3 <= self.hi:
            raise ValueError(f"quartiles out of order: {self}")

    def scale(self) -> float:
        """Robust SD surrogate used to standardize the outcome links."""
        return max((self.q3 - self.q1) / 1.349, 1.0)


@dataclass(frozen=True)
class TrajectoryParam:
    """NIHSS course: improvement deltas and the worsening branch."""

    day1_mean: float
    day1_sd: float
    day2_mean: float
    day2_sd: float
    rise_lambda: float  # extra points past the 4-point threshold, Poisson
    late_fraction: float  # share of worseners whose rise lands on day 2


@dataclass(frozen=True)
class GroupParams:
    fraction: float
    binary: dict[str, float]
    exclusive: tuple[dict[str, float], ...]  # mutually exclusive indicator blocks
    continuous: dict[str, ContinuousParam]
    scores: dict[str, QuartileParam]
    trajectory: TrajectoryParam
    ed_rate: float
    mortality: float
    morbidity: float
    poor_outcome: float  # implied by morbidity+mortality; kept for reporting


@dataclass(frozen=True)
class OutcomeWeights:
    """Standardized log-odds weights of the two outcome links."""

    mortality: dict[str, float]
    morbidity: dict[str, float]


@dataclass(frozen=True)
class CohortSpec:
    n_total: int
    groups: dict[str, GroupParams]
    weights: OutcomeWeights
    n_early_death: int = 0
    n_lost_followup: int = 0
    schema_version: int = SPEC_SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.n_total <= 0:
            raise ValueError("n_total must be positive")
        if set(self.groups) != {"IS", "ICH"}:
            raise ValueError(f"groups must be exactly IS and ICH, got {sorted(self.groups)}")
        total_frac = sum(g.fraction for g in self.groups.values())
        if abs(total_frac - 1.0) > 1e-9:
            raise ValueError(f"group fractions must sum to 1, got {total_frac!r}")
        for name, g in self.groups.items():
            for p in (g.ed_rate, g.mortality, g.morbidity, g.poor_outcome, *g.binary.values()):
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"group {name}: prevalence out of [0, 1]: {p!r}")
            if g.mortality + g.morbidity >= 1.0:
                raise ValueError(f"group {name}: mortality + morbidity must stay below 1")

    def validate_against(self, codebook: FeatureCodebook) -> None:
        """Every applicable feature must be covered by exactly one sampler."""
        derived = {"early_neuro_deterioration"}
        for gname, g in self.groups.items():
            covered: list[str] = list(g.binary) + list(g.continuous) + list(g.scores)
            for block in g.exclusive:
                covered.extend(block)
            dupes = {n for n in covered if covered.count(n) > 1}
            if dupes:
                raise ValueError(f"group {gname}: features sampled twice: {sorted(dupes)}")
            want = set(codebook.applicable(gname)) - derived
            have = set(covered)
            if want != have:
                missing = sorted(want - have)
                extra = sorted(have - want)
                raise ValueError(
                    f"group {gname}: sampler coverage mismatch; missing={missing} extra={extra}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CohortSpec":
        raw = json.loads(text)
        groups = {}
        for name, g in raw["groups"].items():
            groups[name] = GroupParams(
                fraction=g["fraction"],
                binary=dict(g["binary"]),
                exclusive=tuple(dict(b) for b in g["exclusive"]),
                continuous={k: ContinuousParam(**v) for k, v in g["continuous"].items()},
                scores={k: QuartileParam(**v) for k, v in g["scores"].items()},
                trajectory=TrajectoryParam(**g["trajectory"]),
                ed_rate=g["ed_rate"],
                mortality=g["mortality"],
                morbidity=g["morbidity"],
                poor_outcome=g["poor_outcome"],
            )
        return cls(
            n_total=raw["n_total"],
            groups=groups,
            weights=OutcomeWeights(
                mortality=dict(raw["weights"]["mortality"]),
                morbidity=dict(raw["weights"]["morbidity"]),
            ),
            n_early_death=raw.get("n_early_death", 0),
            n_lost_followup=raw.get("n_lost_followup", 0),
            schema_version=raw.get("schema_version", SPEC_SCHEMA_VERSION),
        )


# ======================================================================
# calibration helpers
# ======================================================================

def _calibrate_intercept(z: np.ndarray, target: float, weights: np.ndarray | None = None) -> float:
    """Solve a so that mean(w * sigmoid(a + z)) / n == target (w defaults to 1)."""
    n = z.size
    w = np.ones(n) if weights is None else weights
    cap = float(w.sum()) / n
    if not 0.0 < target < cap:
        raise ValueError(f"target {target!r} unattainable (available mass {cap!r})")
    lo, hi = -60.0, 60.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if float(np.dot(w, _sigmoid(mid + z))) / n < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _truncated_normal_location(target_mean: float, sd: float, lo: float, hi: float) -> float:
    """Location of a truncated normal whose truncated mean equals the target."""
    def truncated_mean(loc: float) -> float:
        alpha = (lo - loc) / sd
        beta = (hi - loc) / sd
        za = stats.normal_cdf(alpha)
        zb = stats.normal_cdf(beta)
        denom = zb - za
        if denom <= 0.0:
            # interval entirely in one tail; mean pinned to the nearer bound
            return lo if alpha > 0 else hi
        return loc + sd * (_normal_pdf(alpha) - _normal_pdf(beta)) / denom

    # negligible truncation: keep the nominal location
    if stats.normal_cdf((lo - target_mean) / sd) < 1e-10 and \
            stats.normal_cdf((target_mean - hi) / sd) < 1e-10:
        return target_mean
    a, b = target_mean - 12.0 * sd, target_mean + 12.0 * sd
    for _ in range(200):
        mid = 0.5 * (a + b)
        if truncated_mean(mid) < target_mean:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _sample_truncated_normal(rng: np.random.Generator, p: ContinuousParam, n: int) -> np.ndarray:
    loc = _truncated_normal_location(p.mean, p.sd, p.lo, p.hi)
    za = stats.normal_cdf((p.lo - loc) / p.sd)
    zb = stats.normal_cdf((p.hi - loc) / p.sd)
    u = za + rng.random(n) * (zb - za)
    x = loc + p.sd * stats.normal_ppf(u)
    x = np.clip(x, p.lo, p.hi)
    return np.round(x, p.decimals)


def _sample_quartile_score(rng: np.random.Generator, p: QuartileParam, n: int) -> np.ndarray:
    """Piecewise-linear inverse CDF through the published quartiles."""
    spread = max(p.q3 - p.q1, 1.0)
    top = min(p.hi, p.q3 + 2.2 * spread)
    knots_u = (0.0, 0.25, 0.5, 0.75, 1.0)
    knots_x = (p.lo, p.q1, p.median, p.q3, top)
    u = rng.random(n)
    x = np.interp(u, knots_u, knots_x)
    return np.clip(np.rint(x), p.lo, p.hi)


def _pick_levels(rng: np.random.Generator, probs: list[float], n: int) -> np.ndarray:
    """Index of the chosen level per draw; len(probs) means "none"."""
    edges = np.cumsum(probs)
    if edges[-1] > 1.0 + 1e-9:
        raise ValueError(f"exclusive block probabilities sum to {edges[-1]!r} > 1")
    return np.searchsorted(edges, rng.random(n), side="right")


# ======================================================================
# generation
# ======================================================================

def _standardize(name: str, col: np.ndarray, g: GroupParams,
                 codebook: FeatureCodebook) -> np.ndarray:
    if name in g.continuous:
        p = g.continuous[name]
        return (col - p.mean) / p.sd
    if name in g.scores:
        p = g.scores[name]
        return (col - p.median) / p.scale()
    if codebook.get(name).kind == "binary":
        return col  # raw 0/1; the weight is a log odds ratio
    raise ValueError(f"no standardization rule for outcome-link feature {name!r}")


def _link_index(columns: dict[str, np.ndarray], weights: dict[str, float],
                g: GroupParams, codebook: FeatureCodebook) -> np.ndarray:
    n = next(iter(columns.values())).size
    z = np.zeros(n)
    for name, w in weights.items():
        if name not in columns:
            raise ValueError(f"outcome link uses {name!r}, which was not sampled")
        z += w * _standardize(name, columns[name], g, codebook)
    return z


def _sample_group_features(rng: np.random.Generator, g: GroupParams,
                           codebook: FeatureCodebook, n: int) -> dict[str, np.ndarray]:
    """All applicable feature columns for one group, in a fixed draw order."""
    cols: dict[str, np.ndarray] = {}
    for name in sorted(g.binary, key=codebook.index):
        cols[name] = (rng.random(n) < g.binary[name]).astype(float)
    for block in g.exclusive:
        names = sorted(block, key=codebook.index)
        level = _pick_levels(rng, [block[nm] for nm in names], n)
        for i, nm in enumerate(names):
            cols[nm] = (level == i).astype(float)
    for name in sorted(g.continuous, key=codebook.index):
        cols[name] = _sample_truncated_normal(rng, g.continuous[name], n)
    for name in sorted(g.scores, key=codebook.index):
        if name in ("nihss_24h", "nihss_48h"):
            continue  # realized by the trajectory model below
        cols[name] = _sample_quartile_score(rng, g.scores[name], n)

    # deterioration flag: logistic on admission severity, calibrated to the
    # group's early-deterioration rate over the patients who can still rise
    # 4 points (a score near the scale ceiling cannot express the flag)
    n0 = cols["nihss_admission"]
    sev = (n0 - g.scores["nihss_admission"].median) / g.scores["nihss_admission"].scale()
    can_rise = (n0 <= 42.0 - _ED_RISE).astype(float)
    a_det = _calibrate_intercept(1.1 * sev, g.ed_rate, weights=can_rise)
    worsens = (can_rise > 0) & (rng.random(n) < _sigmoid(a_det + 1.1 * sev))

    t = g.trajectory
    d1 = np.rint(rng.normal(t.day1_mean, t.day1_sd, n))
    d2 = np.rint(rng.normal(t.day2_mean, t.day2_sd, n))
    d1 = np.minimum(d1, _ED_RISE - 1)  # improvers must stay below the ED threshold
    d2 = np.minimum(d2, _ED_RISE - 1 - d1)
    late = rng.random(n) < t.late_fraction
    rise = _ED_RISE + rng.poisson(t.rise_lambda, n)
    settle = np.rint(rng.normal(0.5, 2.0, n))
    late_start = rng.integers(0, int(_ED_RISE), n).astype(float)
    d1 = np.where(worsens, np.where(late, late_start, rise), d1)
    d2 = np.where(worsens, np.where(late, rise - late_start, settle), d2)

    n24 = np.clip(n0 + d1, 0.0, 42.0)
    n48 = np.clip(n24 + d2, 0.0, 42.0)
    cols["nihss_24h"] = n24
    cols["nihss_48h"] = n48
    cols["early_neuro_deterioration"] = (np.maximum(n24, n48) - n0 >= _ED_RISE).astype(float)
    return cols


def _draw_mrs(rng: np.random.Generator, died: np.ndarray, morbid: np.ndarray) -> np.ndarray:
    n = died.size
    u = rng.random(n)
    mrs = np.empty(n, dtype=np.int64)
    good_edges = np.cumsum(_GOOD_MRS_PROBS)
    morb_edges = np.cumsum(_MORBIDITY_MRS_PROBS)
    mrs[:] = np.searchsorted(good_edges, u, side="right")
    morb_lvl = 3 + np.searchsorted(morb_edges, u, side="right")
    mrs = np.where(morbid, morb_lvl, mrs)
    mrs = np.where(died, 6, mrs)
    return mrs


def _records_from_columns(cols: dict[str, np.ndarray], mrs: np.ndarray | None,
                          stroke_type: str, codebook: FeatureCodebook, *,
                          died_first_24h: bool = False,
                          lost_followup: bool = False) -> list[PatientRecord]:
    names = [nm for nm in codebook.names() if nm in cols]
    n = next(iter(cols.values())).size
    out = []
    for i in range(n):
        values = {nm: float(cols[nm][i]) for nm in names}
        out.append(PatientRecord(
            stroke_type=stroke_type,
            mrs_3m=None if mrs is None else int(mrs[i]),
            values=values,
            died_first_24h=died_first_24h,
            lost_followup=lost_followup,
        ))
    return out


def generate_synthetic_cohort(spec: CohortSpec, seed: int,
                              codebook: FeatureCodebook | None = None) -> Cohort:
    """Generate one cohort; identical (spec, seed) gives identical records."""
    codebook = codebook if codebook is not None else default_codebook()
    spec.validate_against(codebook)
    rng = np.random.default_rng(seed)

    group_names = ("IS", "ICH")
    sizes = {name: int(round(spec.n_total * spec.groups[name].fraction)) for name in group_names}
    # rounding both fractions can gain/lose a record; pin the total exactly
    sizes["ICH"] = spec.n_total - sizes["IS"]

    records: list[PatientRecord] = []
    for gname in group_names:
        g = spec.groups[gname]
        n = sizes[gname]
        if n == 0:
            continue
        cols = _sample_group_features(rng, g, codebook, n)

        z_mort = _link_index(cols, spec.weights.mortality, g, codebook)
        a_mort = _calibrate_intercept(z_mort, g.mortality)
        p_death = _sigmoid(a_mort + z_mort)
        died = rng.random(n) < p_death

        z_morb = _link_index(cols, spec.weights.morbidity, g, codebook)
        a_morb = _calibrate_intercept(z_morb, g.morbidity, weights=1.0 - p_death)
        morbid = (~died) & (rng.random(n) < _sigmoid(a_morb + z_morb))

        mrs = _draw_mrs(rng, died, morbid)
        records.extend(_records_from_columns(cols, mrs, gname, codebook))

    # optional registry-style extras that the exclusion step removes
    for gname in group_names:
        g = spec.groups[gname]
        n_death = int(round(spec.n_early_death * g.fraction))
        if gname == "ICH":
            n_death = spec.n_early_death - int(round(spec.n_early_death * spec.groups["IS"].fraction))
        if n_death > 0:
            cols = _sample_group_features(rng, g, codebook, n_death)
            mrs = np.full(n_death, 6)
            records.extend(_records_from_columns(cols, mrs, gname, codebook, died_first_24h=True))
        n_lost = int(round(spec.n_lost_followup * g.fraction))
        if gname == "ICH":
            n_lost = spec.n_lost_followup - int(round(spec.n_lost_followup * spec.groups["IS"].fraction))
        if n_lost > 0:
            cols = _sample_group_features(rng, g, codebook, n_lost)
            records.extend(_records_from_columns(cols, None, gname, codebook, lost_followup=True))

    return Cohort(records, codebook, validate=False)


# ======================================================================
# default parameterization
# ======================================================================

# Group morbidity targets are scaled (x1.08211) from the published per-group
# figures so the combined cohort lands on the published combined fraction;
# the published cells are not a convex combination of themselves.
_IS_FRACTION = 4922.0 / 6022.0


def _is_params() -> GroupParams:
    return GroupParams(
        fraction=_IS_FRACTION,
        binary={
            "sex_female": 0.448,
            "hypertension": 0.637,
            "diabetes": 0.241,
            "alcohol_abuse": 0.115,
            "smoking": 0.164,
            "dyslipidemia": 0.351,
            "peripheral_artery_disease": 0.059,
            "ischemic_heart_disease": 0.113,
            "atrial_fibrillation": 0.241,
            "prior_tia": 0.061,
            "prior_ischemic_stroke": 0.136,
            "prior_hemorrhagic_stroke": 0.009,
            "anticoagulant_use": 0.085,
            "antiplatelet_use": 0.244,
            "stroke_on_awakening": 0.091,
            "iv_thrombolysis": 0.227,
            "mechanical_thrombectomy": 0.052,
        },
        exclusive=(
            {
                "infarct_atherothrombotic": 0.229,
                "infarct_cardioembolic": 0.363,
                "infarct_lacunar": 0.087,
                "infarct_undetermined": 0.309,
                "infarct_other_cause": 0.012,
            },
            {
                "hemorrhagic_transformation_ih1": 0.070,
                "hemorrhagic_transformation_ih2": 0.031,
                "hemorrhagic_transformation_ph1": 0.017,
                "hemorrhagic_transformation_ph2": 0.012,
            },
        ),
        continuous={
            "age": ContinuousParam(71.9, 13.8, 18.0, 102.0, 0),
            "onset_to_admission_min": ContinuousParam(240.8, 167.4, 5.0, 1440.0, 0),
            "dwi_lesion_volume_ml": ContinuousParam(33.3, 76.9, 0.0, 600.0, 1),
            "ct_lesion_volume_day4_7_ml": ContinuousParam(51.1, 82.3, 0.0, 600.0, 1),
            "temperature_admission": ContinuousParam(36.4, 0.7, 33.5, 41.5, 1),
            "glucose_admission": ContinuousParam(137.3, 57.9, 40.0, 600.0, 1),
            "esr_admission": ContinuousParam(26.5, 23.1, 0.0, 140.0, 1),
            "hba1c": ContinuousParam(6.1, 2.3, 3.5, 18.0, 1),
            "ldl_cholesterol": ContinuousParam(112.5, 44.4, 20.0, 400.0, 1),
            "hdl_cholesterol": ContinuousParam(41.8, 18.5, 5.0, 150.0, 1),
            "triglycerides": ContinuousParam(121.2, 65.1, 20.0, 800.0, 1),
            "platelet_count": ContinuousParam(217.7, 83.7, 10.0, 900.0, 1),
            "hemoglobin": ContinuousParam(13.8, 1.9, 4.0, 22.0, 1),
            "diastolic_bp_admission": ContinuousParam(81.5, 15.8, 30.0, 150.0, 1),
            "systolic_bp_admission": ContinuousParam(152.5, 27.3, 60.0, 260.0, 1),
            "leukocyte_count_admission": ContinuousParam(9.1, 3.2, 1.5, 30.0, 1),
            "fibrinogen": ContinuousParam(444.5, 101.8, 80.0, 1000.0, 1),
            "c_reactive_protein": ContinuousParam(3.6, 4.2, 0.0, 40.0, 2),
            "microalbuminuria": ContinuousParam(5.9, 25.9, 0.0, 300.0, 1),
            "nt_probnp": ContinuousParam(1581.2, 1886.1, 0.0, 20000.0, 1),
        },
        scores={
            "prestroke_mrs": QuartileParam(0, 0, 1, 0, 5),
            "nihss_admission": QuartileParam(13, 8, 19, 0, 42),
            "nihss_24h": QuartileParam(7, 3, 15, 0, 42),
            "nihss_48h": QuartileParam(6, 2, 14, 0, 42),
        },
        trajectory=TrajectoryParam(
            day1_mean=-5.6, day1_sd=3.4,
            day2_mean=-1.4, day2_sd=2.0,
            rise_lambda=2.5, late_fraction=0.45,
        ),
        ed_rate=0.058,
        mortality=0.132,
        morbidity=0.36143,
        poor_outcome=0.475,
    )


def _ich_params() -> GroupParams:
    return GroupParams(
        fraction=1.0 - _IS_FRACTION,
        binary={
            "sex_female": 0.415,
            "hypertension": 0.607,
            "diabetes": 0.204,
            "alcohol_abuse": 0.154,
            "smoking": 0.107,
            "dyslipidemia": 0.367,
            "peripheral_artery_disease": 0.046,
            "ischemic_heart_disease": 0.086,
            "atrial_fibrillation": 0.181,
            "prior_tia": 0.025,
            "prior_ischemic_stroke": 0.098,
            "prior_hemorrhagic_stroke": 0.098,
            "anticoagulant_use": 0.141,
            "antiplatelet_use": 0.165,
            "stroke_on_awakening": 0.046,
        },
        exclusive=(
            {
                "ich_hypertensive_etiology": 0.460,
                "ich_amyloid_etiology": 0.104,
                "ich_anticoagulant_etiology": 0.142,
                "ich_other_etiology": 0.294,
            },
            {
                "hematoma_deep_location": 0.500,
                "hematoma_lobar_location": 0.396,
                "hematoma_cerebellar_location": 0.047,
                "hematoma_brainstem_location": 0.038,
                "hematoma_intraventricular_location": 0.019,
            },
        ),
        continuous={
            "age": ContinuousParam(73.3, 13.1, 18.0, 102.0, 0),
            "onset_to_admission_min": ContinuousParam(231.3, 206.1, 5.0, 1440.0, 0),
            "hematoma_volume_admission_ml": ContinuousParam(40.3, 46.2, 0.0, 400.0, 1),
            "hematoma_volume_day4_7_ml": ContinuousParam(51.9, 48.1, 0.0, 400.0, 1),
            "hematoma_total_volume_day4_7_ml": ContinuousParam(68.3, 53.1, 0.0, 500.0, 1),
            "perihematomal_hypodensity_volume_ml": ContinuousParam(15.2, 17.9, 0.0, 200.0, 1),
            "hematoma_growth_ml": ContinuousParam(11.9, 27.6, 0.0, 300.0, 1),
            "temperature_admission": ContinuousParam(36.6, 0.8, 33.5, 41.5, 1),
            "glucose_admission": ContinuousParam(138.9, 48.1, 40.0, 600.0, 1),
            "esr_admission": ContinuousParam(26.2, 23.1, 0.0, 140.0, 1),
            "hba1c": ContinuousParam(5.8, 0.9, 3.5, 18.0, 1),
            "ldl_cholesterol": ContinuousParam(109.6, 35.2, 20.0, 400.0, 1),
            "hdl_cholesterol": ContinuousParam(38.8, 18.3, 5.0, 150.0, 1),
            "triglycerides": ContinuousParam(109.4, 50.7, 20.0, 800.0, 1),
            "platelet_count": ContinuousParam(203.3, 77.9, 10.0, 900.0, 1),
            "hemoglobin": ContinuousParam(13.5, 2.1, 4.0, 22.0, 1),
            "diastolic_bp_admission": ContinuousParam(84.3, 17.2, 30.0, 150.0, 1),
            "systolic_bp_admission": ContinuousParam(155.5, 27.4, 60.0, 260.0, 1),
            "leukocyte_count_admission": ContinuousParam(8.8, 3.3, 1.5, 30.0, 1),
            "fibrinogen": ContinuousParam(444.1, 101.5, 80.0, 1000.0, 1),
            "c_reactive_protein": ContinuousParam(5.2, 5.2, 0.0, 40.0, 2),
            "microalbuminuria": ContinuousParam(16.7, 30.0, 0.0, 300.0, 1),
            "nt_probnp": ContinuousParam(1013.8, 3620.2, 0.0, 30000.0, 1),
        },
        scores={
            "prestroke_mrs": QuartileParam(1, 0, 1, 0, 5),
            "nihss_admission": QuartileParam(13, 7, 18, 0, 42),
            "nihss_24h": QuartileParam(12, 6, 19, 0, 42),
            "nihss_48h": QuartileParam(12, 4, 20, 0, 42),
        },
        trajectory=TrajectoryParam(
            day1_mean=-0.9, day1_sd=3.2,
            day2_mean=-0.5, day2_sd=2.4,
            rise_lambda=3.0, late_fraction=0.45,
        ),
        ed_rate=0.165,
        mortality=0.302,
        morbidity=0.29866,
        poor_outcome=0.586,
    )


def default_outcome_weights() -> OutcomeWeights:
    return OutcomeWeights(
        mortality={
            "nihss_48h": 1.24,
            "nihss_24h": 0.68,
            "nihss_admission": 0.32,
            "early_neuro_deterioration": 0.64,
            "temperature_admission": 0.34,
            "glucose_admission": 0.34,
            "leukocyte_count_admission": 0.28,
            "age": 0.14,
        },
        morbidity={
            "nihss_48h": 0.72,
            "nihss_24h": 0.42,
            "nihss_admission": 0.27,
            "early_neuro_deterioration": 0.30,
            "temperature_admission": 0.15,
            "glucose_admission": 0.19,
            "leukocyte_count_admission": 0.15,
            "age": 0.26,
        },
    )


def default_cohort_spec(n_total: int = 6022, *, n_early_death: int = 0,
                        n_lost_followup: int = 0) -> CohortSpec:
    """The bundled parameterization of the published registry."""
    return CohortSpec(
        n_total=n_total,
        groups={"IS": _is_params(), "ICH": _ich_params()},
        weights=default_outcome_weights(),
        n_early_death=n_early_death,
        n_lost_followup=n_lost_followup,
    )
