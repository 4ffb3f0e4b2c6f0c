"""Cohort construction: eligibility, baseline/outcome pairing, covariates.

A patient enters the analysis cohort when (1) at least one visit records a
polyp, (2) there is no colitis/Crohn's history, and (3) after dropping
visits that follow another visit by fewer than 14 days (assumed faulty
preparation), a baseline polyp visit and a visit at least 183 days later
remain.  The first polyp-bearing visit is the baseline; the first later
polyp-bearing visit at >= 183 days is the recurrence outcome, otherwise the
patient is censored at the last visit.  Every covariate is taken from the
baseline visit and the demographics record only.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NoEventsError
from .reports import ColonSite, VisitSummary

MIN_SEPARATION_DAYS = 183
FAULTY_GAP_DAYS = 14


@dataclass
class Demographics:
    """Demographic and clinical fields; ``None`` marks a missing value."""

    gender: str | None = None
    age_years: float | None = None
    bmi: float | None = None
    height_cm: float | None = None
    weight_kg: float | None = None
    smoking_status: str | None = None
    smoking_frequency: str | None = None
    race: str | None = None
    ethnicity: str | None = None
    marital_status: str | None = None


@dataclass
class PatientHistory:
    patient_id: str
    demographics: Demographics
    visits: list[tuple[_dt.date, VisitSummary]]
    colitis_or_crohns: bool = False

    def __post_init__(self):
        dates = [d for d, _ in self.visits]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError(f"visits of {self.patient_id} not strictly "
                             "increasing by date")


class ExclusionReason(Enum):
    NO_POLYP_RECORD = "no_polyp_record"
    COLITIS_OR_CROHNS = "colitis_or_crohns"
    TOO_FEW_VISITS = "too_few_visits"


class ColonSide(Enum):
    LEFT = "Left"
    RIGHT = "Right"
    OTHER = "Other"


@dataclass
class PatientCase:
    patient_id: str
    time_days: int
    event: bool
    covariates: dict[str, float | str | None]
    exclusion: ExclusionReason | None = None


def drop_faulty_visits(visits, gap_days: int = FAULTY_GAP_DAYS):
    """Drop the later visit of any pair closer than ``gap_days`` apart."""
    retained = []
    for date, summary in visits:
        if retained and (date - retained[-1][0]).days < gap_days:
            continue
        retained.append((date, summary))
    return retained


def _eligibility(history: PatientHistory,
                 min_separation_days: int,
                 faulty_gap_days: int) -> ExclusionReason | None:
    """First violated criterion, or None when eligible."""
    if not any(s.polyp_count >= 1 for _, s in history.visits):
        return ExclusionReason.NO_POLYP_RECORD
    if history.colitis_or_crohns:
        return ExclusionReason.COLITIS_OR_CROHNS
    retained = drop_faulty_visits(history.visits, faulty_gap_days)
    baseline = next(((d, s) for d, s in retained if s.polyp_count >= 1), None)
    if baseline is None:
        return ExclusionReason.TOO_FEW_VISITS
    last_date = retained[-1][0]
    if (last_date - baseline[0]).days < min_separation_days:
        return ExclusionReason.TOO_FEW_VISITS
    return None


def filter_eligible(histories,
                    min_separation_days: int = MIN_SEPARATION_DAYS,
                    faulty_gap_days: int = FAULTY_GAP_DAYS):
    """Partition histories into (eligible, excluded-with-reason).

    Every history lands in exactly one of the two lists; excluded entries
    carry the first violated criterion.
    """
    eligible: list[PatientHistory] = []
    excluded: list[tuple[PatientHistory, ExclusionReason]] = []
    for history in histories:
        reason = _eligibility(history, min_separation_days, faulty_gap_days)
        if reason is None:
            eligible.append(history)
        else:
            excluded.append((history, reason))
    return eligible, excluded


# Anatomic sides; the splenic flexure marks the left colon boundary and the
# transverse colon belongs to neither side.
RIGHT_SITES = frozenset({ColonSite.ILEUM_CECUM, ColonSite.ILEOCECAL,
                         ColonSite.ASCENDING, ColonSite.HEPATIC})
LEFT_SITES = frozenset({ColonSite.DESCENDING, ColonSite.SIGMOID,
                        ColonSite.RECTUM, ColonSite.ANUS, ColonSite.SPLENIC})


def designate_side(summary: VisitSummary,
                   right_sites=RIGHT_SITES,
                   left_sites=LEFT_SITES) -> ColonSide:
    """Left/Right/Other designation of a visit's polyps.

    A side wins only with a strict majority of the located polyps
    (transverse polyps count toward the located total but toward neither
    side); ties and unlocated-dominated visits are Other.
    """
    if summary.polyp_count == 0:
        raise ValueError("side designation requires at least one polyp")
    located = sum(summary.location_counts.values())
    left = sum(n for site, n in summary.location_counts.items()
               if site in left_sites)
    right = sum(n for site, n in summary.location_counts.items()
                if site in right_sites)
    if 2 * left > located:
        return ColonSide.LEFT
    if 2 * right > located:
        return ColonSide.RIGHT
    return ColonSide.OTHER


def baseline_covariates(history: PatientHistory,
                        faulty_gap_days: int = FAULTY_GAP_DAYS) -> dict:
    """Covariate map from the baseline visit and demographics only."""
    retained = drop_faulty_visits(history.visits, faulty_gap_days)
    baseline = next((s for _, s in retained if s.polyp_count >= 1), None)
    if baseline is None:
        raise ValueError(f"{history.patient_id} has no baseline polyp visit")
    demo = history.demographics
    return {
        "gender": demo.gender,
        "age_years": demo.age_years,
        "bmi": demo.bmi,
        "height_cm": demo.height_cm,
        "weight_kg": demo.weight_kg,
        "smoking_status": demo.smoking_status,
        "smoking_frequency": demo.smoking_frequency,
        "race": demo.race,
        "ethnicity": demo.ethnicity,
        "marital_status": demo.marital_status,
        "polyp_count": float(baseline.polyp_count),
        "polyp_size_max_mm": baseline.max_size_mm,
        "polyp_size_mean_mm": baseline.mean_size_mm,
        "side": designate_side(baseline).value,
    }


def pair_baseline_outcome(history: PatientHistory,
                          min_separation_days: int = MIN_SEPARATION_DAYS,
                          faulty_gap_days: int = FAULTY_GAP_DAYS) -> PatientCase:
    """Pair the baseline polyp visit with its recurrence/censoring outcome.

    Calling this on an ineligible history is a programming error.
    """
    retained = drop_faulty_visits(history.visits, faulty_gap_days)
    baseline = next(((d, s) for d, s in retained if s.polyp_count >= 1), None)
    if baseline is None:
        raise ValueError(f"{history.patient_id} is not eligible (no baseline)")
    base_date = baseline[0]
    outcome = next(
        ((d, s) for d, s in retained
         if (d - base_date).days >= min_separation_days and s.polyp_count >= 1),
        None)
    if outcome is not None:
        event = True
        time_days = (outcome[0] - base_date).days
    else:
        event = False
        time_days = (retained[-1][0] - base_date).days
    if time_days < min_separation_days:
        raise ValueError(f"{history.patient_id} is not eligible "
                         f"(follow-up {time_days} d)")
    return PatientCase(patient_id=history.patient_id, time_days=time_days,
                       event=event,
                       covariates=baseline_covariates(history, faulty_gap_days))


class DiscretizeScheme(Enum):
    MEDIAN_BINARY = "median_binary"
    TERTILE = "tertile"


def discretize(values, scheme: DiscretizeScheme) -> list[str]:
    """Median-binary (Low/High) or tertile (T1/T2/T3) factor levels.

    Boundary values fall in the lower bin, so High and the upper tertiles
    are strict.  Quantiles are computed on the value multiset, making the
    output invariant to input order.
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("discretize requires a non-empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError("discretize requires finite values")
    if scheme is DiscretizeScheme.MEDIAN_BINARY:
        median = float(np.median(arr))
        return ["High" if v > median else "Low" for v in arr]
    if scheme is DiscretizeScheme.TERTILE:
        q1, q2 = (float(np.quantile(arr, 1 / 3)), float(np.quantile(arr, 2 / 3)))
        return ["T1" if v <= q1 else "T2" if v <= q2 else "T3" for v in arr]
    raise ValueError(f"unknown scheme {scheme!r}")


class VariableKind(Enum):
    CONTINUOUS = "continuous"
    FACTOR = "factor"


@dataclass(frozen=True)
class VariableSpec:
    """One dataset variable; for factors, ``levels[0]`` is the reference."""

    name: str
    kind: VariableKind
    levels: tuple[str, ...] = ()


# Baseline covariate schema.  Factor levels list the expected vocabulary
# with the reference level first (Never-user and left colon are the
# baselines of the fitted models); levels seen in data but not declared
# here are appended in order of first appearance.
BASE_SCHEMA: tuple[VariableSpec, ...] = (
    VariableSpec("gender", VariableKind.FACTOR, ("female", "male")),
    VariableSpec("age_years", VariableKind.CONTINUOUS),
    VariableSpec("bmi", VariableKind.CONTINUOUS),
    VariableSpec("height_cm", VariableKind.CONTINUOUS),
    VariableSpec("weight_kg", VariableKind.CONTINUOUS),
    VariableSpec("smoking_status", VariableKind.FACTOR, ("Never", "Used")),
    VariableSpec("smoking_frequency", VariableKind.FACTOR,
                 ("none", "former", "occasional", "daily")),
    VariableSpec("race", VariableKind.FACTOR,
                 ("white", "black", "asian", "other")),
    VariableSpec("ethnicity", VariableKind.FACTOR,
                 ("not_hispanic", "hispanic")),
    VariableSpec("marital_status", VariableKind.FACTOR,
                 ("married", "single", "divorced", "widowed")),
    VariableSpec("polyp_count", VariableKind.CONTINUOUS),
    VariableSpec("polyp_size_max_mm", VariableKind.CONTINUOUS),
    VariableSpec("polyp_size_mean_mm", VariableKind.CONTINUOUS),
    VariableSpec("side", VariableKind.FACTOR, ("Left", "Right", "Other")),
)

# Continuous variables that get median-binary and tertile factor variants.
DISCRETIZED_VARIABLES: tuple[str, ...] = (
    "age_years", "height_cm", "bmi", "polyp_count", "polyp_size_max_mm",
)


@dataclass
class SurvivalDataset:
    """Complete-case columnar dataset ready for time-to-event modeling."""

    patient_ids: list[str]
    time_days: np.ndarray
    event: np.ndarray
    schema: list[VariableSpec]
    columns: dict[str, np.ndarray]
    n_dropped_missing: int = 0

    @property
    def n_cases(self) -> int:
        return len(self.patient_ids)

    def variable(self, name: str) -> VariableSpec:
        for spec in self.schema:
            if spec.name == name:
                return spec
        raise KeyError(name)

    def factor_labels(self, name: str) -> list[str]:
        spec = self.variable(name)
        if spec.kind is not VariableKind.FACTOR:
            raise ValueError(f"{name} is not a factor")
        return [spec.levels[code] for code in self.columns[name]]

    def design_matrix(self, covariates) -> tuple[np.ndarray, list[str]]:
        """Reference-coded design matrix for the named covariates.

        Continuous variables contribute their column; a factor with k
        levels contributes k-1 indicator columns for its non-reference
        levels, named ``var=level``.
        """
        cols: list[np.ndarray] = []
        names: list[str] = []
        for name in covariates:
            spec = self.variable(name)
            if spec.kind is VariableKind.CONTINUOUS:
                cols.append(self.columns[name].astype(float))
                names.append(name)
            else:
                codes = self.columns[name]
                for level_idx, level in enumerate(spec.levels):
                    if level_idx == 0:
                        continue
                    cols.append((codes == level_idx).astype(float))
                    names.append(f"{name}={level}")
        if not cols:
            return np.empty((self.n_cases, 0)), []
        return np.column_stack(cols), names

    def copy(self) -> "SurvivalDataset":
        return SurvivalDataset(
            patient_ids=list(self.patient_ids),
            time_days=self.time_days.copy(),
            event=self.event.copy(),
            schema=list(self.schema),
            columns={k: v.copy() for k, v in self.columns.items()},
            n_dropped_missing=self.n_dropped_missing,
        )


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return False


def _collapse_smoking(value):
    if _is_missing(value):
        return None
    return "Never" if str(value).strip().lower() == "never" else "Used"


def assemble_dataset(cases, schema=BASE_SCHEMA) -> SurvivalDataset:
    """Build the analysis dataset from paired cases.

    Cases missing any schema variable are dropped (the drop count is kept
    on the dataset); smoking status collapses to Never vs Used; median-
    binary and tertile variants of age, height, BMI, polyp count, and polyp
    size are added alongside the continuous originals.
    """
    base = [VariableSpec(s.name, s.kind, tuple(s.levels)) for s in schema]

    complete: list[PatientCase] = []
    dropped = 0
    for case in cases:
        cov = dict(case.covariates)
        if "smoking_status" in cov:
            cov["smoking_status"] = _collapse_smoking(cov["smoking_status"])
        if any(_is_missing(cov.get(s.name)) for s in base):
            dropped += 1
            continue
        complete.append(PatientCase(case.patient_id, case.time_days,
                                    case.event, cov, case.exclusion))
    if not complete:
        raise ValueError("no complete cases remain after missing-data drop")
    if not any(c.event for c in complete):
        raise NoEventsError("assembled dataset contains no recurrence events")

    columns: dict[str, np.ndarray] = {}
    out_schema: list[VariableSpec] = []
    for spec in base:
        raw = [c.covariates[spec.name] for c in complete]
        if spec.kind is VariableKind.CONTINUOUS:
            columns[spec.name] = np.asarray(raw, dtype=float)
            out_schema.append(spec)
        else:
            levels = list(spec.levels)
            for value in raw:
                if str(value) not in levels:
                    levels.append(str(value))
            index = {lvl: i for i, lvl in enumerate(levels)}
            columns[spec.name] = np.asarray([index[str(v)] for v in raw],
                                            dtype=np.int64)
            out_schema.append(VariableSpec(spec.name, spec.kind, tuple(levels)))

    for name in DISCRETIZED_VARIABLES:
        if name not in columns:
            continue
        values = columns[name]
        bin_levels = ("Low", "High")
        bin_labels = discretize(values, DiscretizeScheme.MEDIAN_BINARY)
        columns[f"{name}_bin"] = np.asarray(
            [bin_levels.index(lbl) for lbl in bin_labels], dtype=np.int64)
        out_schema.append(VariableSpec(f"{name}_bin", VariableKind.FACTOR,
                                       bin_levels))
        ter_levels = ("T1", "T2", "T3")
        ter_labels = discretize(values, DiscretizeScheme.TERTILE)
        columns[f"{name}_tertile"] = np.asarray(
            [ter_levels.index(lbl) for lbl in ter_labels], dtype=np.int64)
        out_schema.append(VariableSpec(f"{name}_tertile", VariableKind.FACTOR,
                                       ter_levels))

    return SurvivalDataset(
        patient_ids=[c.patient_id for c in complete],
        time_days=np.asarray([c.time_days for c in complete], dtype=float),
        event=np.asarray([c.event for c in complete], dtype=bool),
        schema=out_schema,
        columns=columns,
        n_dropped_missing=dropped,
    )


def build_cases(histories) -> tuple[list[PatientCase], list[tuple[PatientHistory, ExclusionReason]]]:
    """filter_eligible + pair_baseline_outcome over a raw history list."""
    eligible, excluded = filter_eligible(histories)
    return [pair_baseline_outcome(h) for h in eligible], excluded
