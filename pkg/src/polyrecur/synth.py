"""Synthetic patient histories with planted covariate-dependent hazards.

The generator draws per-patient covariates, plants a proportional-hazards
recurrence time (exponential baseline, multiplicative exp(beta . x)), lays
out a surveillance visit schedule, and renders every visit's ground-truth
polyp summary as free text that the report parser recovers exactly.

The recurrence a study observes is the first visit on or after the latent
recurrence day, so observed times are visit dates, not latent times; this
coarsening is intentional and mirrors how surveillance data is recorded.

Per-patient RNG streams are keyed by (seed, patient index), so generation
is deterministic and order-independent.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cohort import Demographics, PatientHistory
from .errors import UnrenderableSummaryError
from .reports import (
    ColonoscopyReport,
    ColonSite,
    NUMBER_WORDS,
    ParserConfig,
    VisitSummary,
    parse_and_summarize,
)

ORIGIN_DATE = _dt.date(2012, 1, 16)

# Binary factors a hazard ratio may be planted on, with the level coded 1.
PLANTABLE_BINARY = {"gender": "male", "smoking_status": "Used"}
PLANTABLE_CONTINUOUS = (
    "age_years", "bmi", "height_cm", "weight_kg",
    "polyp_count", "polyp_size_max_mm", "polyp_size_mean_mm",
)


class ReportStyle(Enum):
    PLAIN = "plain"
    RANGED = "ranged"
    NUMBER_WORDS = "number_words"


@dataclass(frozen=True)
class SynthConfig:
    n_patients: int = 100
    baseline_hazard_per_day: float = 4e-4
    planted_log_hazard_ratios: dict = field(default_factory=dict)
    censor_horizon_days: int = 6500
    missingness_rate: float = 0.0
    seed: int = 0
    style_weights: tuple[float, float, float] = (0.5, 0.3, 0.2)

    def validate(self) -> None:
        if self.n_patients < 1:
            raise ValueError("n_patients must be positive")
        if self.baseline_hazard_per_day <= 0:
            raise ValueError("baseline hazard must be positive")
        if not 0.0 <= self.missingness_rate < 1.0:
            raise ValueError("missingness_rate must lie in [0, 1)")
        if abs(sum(self.style_weights) - 1.0) > 1e-9:
            raise ValueError("style weights must sum to 1")
        for name in self.planted_log_hazard_ratios:
            if (name not in PLANTABLE_BINARY
                    and name not in PLANTABLE_CONTINUOUS):
                raise ValueError(f"cannot plant a hazard ratio on {name!r}")


@dataclass
class PatientGroundTruth:
    patient_id: str
    linear_predictor: float
    hazard_per_day: float
    latent_recurrence_day: float


_SITE_PHRASES = {
    ColonSite.TRANSVERSE: "in the transverse colon",
    ColonSite.SIGMOID: "in the sigmoid colon",
    ColonSite.ILEUM_CECUM: "in the ileum cecum",
    ColonSite.ANUS: "near the anus",
    ColonSite.ASCENDING: "in the ascending colon",
    ColonSite.DESCENDING: "in the descending colon",
    ColonSite.HEPATIC: "at the hepatic flexure",
    ColonSite.RECTUM: "in the rectum",
    ColonSite.ILEOCECAL: "at the ileocecal valve",
    ColonSite.SPLENIC: "at the splenic flexure",
}

# Filler sentences free of vocabulary sites, numbers, and units.
_FILLERS = (
    "Patient tolerated the procedure well.",
    "The preparation was adequate.",
    "Procedure completed without complication.",
    "Scope advanced and withdrawn without difficulty.",
)

_NO_POLYP_TEXTS = (
    "Normal colonoscopy, no polyps.",
    "No polyps were identified.",
    "Mucosa appeared normal throughout, no polyps seen.",
)

_WORD_BY_VALUE = {v: w for w, v in NUMBER_WORDS.items() if v <= 20}
_TENS_BY_VALUE = {v: w for w, v in NUMBER_WORDS.items() if v >= 30}
_TENS_BY_VALUE[20] = "twenty"


def number_to_words(n: int) -> str:
    """English words for 0..99 ("twenty-one" style compounds)."""
    if not 0 <= n <= 99:
        raise ValueError("number words cover 0..99 only")
    if n <= 20:
        return _WORD_BY_VALUE[n]
    tens, ones = divmod(n, 10)
    if ones == 0:
        return _TENS_BY_VALUE[tens * 10]
    return f"{_TENS_BY_VALUE[tens * 10]}-{_WORD_BY_VALUE[ones]}"


def _format_value(v: float) -> str:
    return str(int(v)) if v == int(v) else repr(v)


def _render_size(lo: float, hi: float, style: ReportStyle,
                 rng: np.random.Generator) -> str:
    """Size phrase in mm or (when exact) cm; ranges keep both bounds."""
    unit = "mm"
    a, b = lo, hi
    cm_prob = 0.4 if style is ReportStyle.RANGED else (
        0.25 if style is ReportStyle.PLAIN else 0.0)
    if rng.random() < cm_prob:
        lo_cm, hi_cm = lo / 10.0, hi / 10.0
        if lo_cm * 10.0 == lo and hi_cm * 10.0 == hi:
            unit, a, b = "cm", lo_cm, hi_cm
    if a == b:
        if (style is ReportStyle.NUMBER_WORDS and unit == "mm"
                and a == int(a) and 0 <= a <= 99):
            return f"{number_to_words(int(a))} {unit}"
        return f"{_format_value(a)} {unit}"
    marker = " to " if rng.random() < 0.5 else "-"
    return f"{_format_value(a)}{marker}{_format_value(b)} {unit}"


def _render_count(count: int, style: ReportStyle, sized: bool,
                  rng: np.random.Generator, allow_article: bool) -> str:
    if count == 1 and allow_article and rng.random() < 0.5:
        return "a" if sized else "one"
    if style is ReportStyle.NUMBER_WORDS or rng.random() < 0.3:
        return number_to_words(count)
    return str(count)


@dataclass
class _MentionPlan:
    site: ColonSite | None
    count: int
    lo: float | None
    hi: float | None


def _decompose(summary: VisitSummary,
               rng: np.random.Generator) -> list[_MentionPlan]:
    """Split a summary into renderable mentions reproducing it exactly.

    One mention per site plus an unlocated remainder; the largest size is
    carried by one mention, either as a point value (with the others solved
    to preserve the count-weighted mean) or as a range around the mean.
    """
    plans: list[_MentionPlan] = []
    site_items = list(summary.location_counts.items())
    rng.shuffle(site_items)
    for site, count in site_items:
        plans.append(_MentionPlan(site, count, None, None))
    remainder = summary.polyp_count - sum(c for _, c in site_items)
    if remainder > 0:
        plans.append(_MentionPlan(None, remainder, None, None))
    # keep any unlocated mention last so it can never capture a later count
    plans.sort(key=lambda p: p.site is None)

    mean, top = summary.mean_size_mm, summary.max_size_mm
    if mean is None:
        return plans
    if mean == top:
        for plan in plans:
            plan.lo = plan.hi = mean
        return plans

    total = summary.polyp_count
    carrier = plans[-1]
    rest = total - carrier.count
    if rest > 0:
        v = (mean * total - carrier.count * top) / rest
        if v >= 0:
            for plan in plans:
                plan.lo, plan.hi = v, v
            carrier.lo = carrier.hi = top
            if _mean_of(plans) == mean:
                return plans
    lo = 2.0 * mean - top
    if lo < 0:
        raise UnrenderableSummaryError(
            f"mean {mean} and max {top} admit no nonnegative size split")
    for plan in plans:
        plan.lo, plan.hi = mean, mean
    carrier.lo, carrier.hi = lo, top
    if _mean_of(plans) != mean:
        raise UnrenderableSummaryError(
            "size decomposition is not exact in float arithmetic")
    return plans


def _mean_of(plans) -> float:
    weight = sum(p.count for p in plans if p.lo is not None)
    total = sum(p.count * (p.lo + p.hi) / 2.0 for p in plans
                if p.lo is not None)
    return total / weight


def generate_report_text(summary: VisitSummary, style: ReportStyle,
                         rng: np.random.Generator) -> str:
    """Render a visit summary as report text the parser recovers exactly.

    The rendered text is verified by round-tripping through the parser;
    a summary that cannot be expressed raises UnrenderableSummaryError.
    """
    if summary.polyp_count == 0:
        text = str(rng.choice(_NO_POLYP_TEXTS))
        if rng.random() < 0.3:
            text = f"{rng.choice(_FILLERS)} {text}"
        return text

    plans = _decompose(summary, rng)
    sentences = []
    if rng.random() < 0.4:
        sentences.append(str(rng.choice(_FILLERS)))
    for plan in plans:
        sized = plan.lo is not None
        count_phrase = _render_count(plan.count, style, sized, rng,
                                     allow_article=plan.site is not None)
        noun = "polyp" if plan.count == 1 else "polyps"
        parts = [count_phrase]
        if sized and (style is not ReportStyle.RANGED or rng.random() < 0.5):
            parts.extend([_render_size(plan.lo, plan.hi, style, rng), noun])
        elif sized:
            parts.extend([noun, _render_size(plan.lo, plan.hi, style, rng)])
        else:
            parts.append(noun)
        if plan.site is not None:
            parts.append(_SITE_PHRASES[plan.site])
        else:
            parts.append("removed" if rng.random() < 0.5 else "seen")
        sentence = " ".join(parts) + "."
        sentences.append(sentence[0].upper() + sentence[1:])
    text = " ".join(sentences)

    recovered = parse_and_summarize(
        ColonoscopyReport("verify", ORIGIN_DATE, text), ParserConfig())
    ok = (recovered.polyp_count == summary.polyp_count
          and recovered.location_counts == summary.location_counts
          and recovered.max_size_mm == summary.max_size_mm
          and _close(recovered.mean_size_mm, summary.mean_size_mm))
    if not ok:
        raise UnrenderableSummaryError(
            f"rendered text does not round-trip: {text!r}")
    return text


def _close(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= 1e-9


def _draw_sites(rng: np.random.Generator, n_mentions: int) -> list:
    sites = list(ColonSite)
    picks = []
    for _ in range(n_mentions):
        if rng.random() < 0.08:
            picks.append(None)
        else:
            picks.append(sites[int(rng.integers(len(sites)))])
    return picks


def draw_polyp_summary(rng: np.random.Generator,
                       point_sizes_only: bool = False) -> VisitSummary:
    """Ground-truth polyp features for one polyp-bearing visit."""
    count = int(min(rng.geometric(0.5), 12))
    n_mentions = int(rng.integers(1, min(count, 3) + 1))
    counts = np.ones(n_mentions, dtype=int)
    for _ in range(count - n_mentions):
        counts[int(rng.integers(n_mentions))] += 1
    sizes = np.round(2.0 * rng.lognormal(math.log(5.0), 0.45,
                                         size=n_mentions)) / 2.0
    sizes = np.clip(sizes, 1.0, 30.0)
    if point_sizes_only:
        sizes[:] = sizes[0]
    site_picks = _draw_sites(rng, n_mentions)

    location_counts: dict[ColonSite, int] = {}
    for site, c in zip(site_picks, counts):
        if site is not None:
            location_counts[site] = location_counts.get(site, 0) + int(c)
    mean = float((counts * sizes).sum() / counts.sum())
    return VisitSummary(polyp_count=count, mean_size_mm=mean,
                        max_size_mm=float(sizes.max()),
                        location_counts=location_counts)


def _draw_demographics(rng: np.random.Generator) -> Demographics:
    gender = "male" if rng.random() < 0.5 else "female"
    age = float(np.round(np.clip(rng.normal(62.0, 10.0), 25.0, 90.0), 1))
    height = float(np.round(np.clip(rng.normal(168.0, 9.0), 140.0, 200.0), 1))
    weight = float(np.round(np.clip(rng.normal(80.0, 14.0), 40.0, 160.0), 1))
    bmi = float(np.round(weight / (height / 100.0) ** 2, 1))
    used = rng.random() < 0.45
    if used:
        frequency = str(rng.choice(["former", "occasional", "daily"],
                                   p=[0.5, 0.2, 0.3]))
    else:
        frequency = "none"
    race = str(rng.choice(["white", "black", "asian", "other"],
                          p=[0.8, 0.08, 0.06, 0.06]))
    ethnicity = str(rng.choice(["not_hispanic", "hispanic"], p=[0.93, 0.07]))
    marital = str(rng.choice(["married", "single", "divorced", "widowed"],
                             p=[0.6, 0.2, 0.12, 0.08]))
    return Demographics(gender=gender, age_years=age, bmi=bmi,
                        height_cm=height, weight_kg=weight,
                        smoking_status="Used" if used else "Never",
                        smoking_frequency=frequency, race=race,
                        ethnicity=ethnicity, marital_status=marital)


def _linear_predictor(planted: dict, demo: Demographics,
                      baseline: VisitSummary) -> float:
    values = {
        "age_years": demo.age_years,
        "bmi": demo.bmi,
        "height_cm": demo.height_cm,
        "weight_kg": demo.weight_kg,
        "polyp_count": float(baseline.polyp_count),
        "polyp_size_max_mm": baseline.max_size_mm,
        "polyp_size_mean_mm": baseline.mean_size_mm,
        "gender": 1.0 if demo.gender == PLANTABLE_BINARY["gender"] else 0.0,
        "smoking_status": (1.0 if demo.smoking_status
                           == PLANTABLE_BINARY["smoking_status"] else 0.0),
    }
    return sum(beta * values[name] for name, beta in planted.items())


_MASKABLE_FIELDS = ("gender", "age_years", "bmi", "height_cm", "weight_kg",
                    "smoking_status", "smoking_frequency", "race",
                    "ethnicity", "marital_status")


def _visit_days(rng: np.random.Generator, horizon: int) -> list[int]:
    """Surveillance returns at jittered 1-3 year intervals up to horizon."""
    days = []
    day = 0.0
    while True:
        gap = float(rng.choice([365.0, 730.0, 1095.0], p=[0.6, 0.25, 0.15]))
        day += gap + rng.uniform(-30.0, 30.0)
        if day > horizon:
            return days
        days.append(int(round(day)))


def _style_for(rng: np.random.Generator, weights) -> ReportStyle:
    styles = (ReportStyle.PLAIN, ReportStyle.RANGED, ReportStyle.NUMBER_WORDS)
    return styles[int(rng.choice(3, p=list(weights)))]


def _summary_with_text(rng, style) -> tuple[VisitSummary, str]:
    summary = draw_polyp_summary(rng)
    try:
        text = generate_report_text(summary, style, rng)
    except UnrenderableSummaryError:
        summary = draw_polyp_summary(rng, point_sizes_only=True)
        text = generate_report_text(summary, style, rng)
    return summary, text


def generate_patient(index: int, config: SynthConfig
                     ) -> tuple[PatientHistory, PatientGroundTruth, list]:
    """One patient: history, ground truth, and raw reports (for JSONL)."""
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(0, index)))
    patient_id = f"synth-{index:06d}"
    demo = _draw_demographics(rng)
    style = _style_for(rng, config.style_weights)

    baseline, baseline_text = _summary_with_text(rng, style)
    eta = _linear_predictor(config.planted_log_hazard_ratios, demo, baseline)
    rate = config.baseline_hazard_per_day * math.exp(eta)
    latent = float(rng.exponential(1.0 / rate))

    visits: list[tuple[_dt.date, VisitSummary]] = []
    reports: list[ColonoscopyReport] = []

    def add(day: int, summary: VisitSummary, text: str) -> None:
        date = ORIGIN_DATE + _dt.timedelta(days=day)
        visits.append((date, summary))
        reports.append(ColonoscopyReport(patient_id, date, text))

    add(0, baseline, baseline_text)
    for day in _visit_days(rng, config.censor_horizon_days):
        if day >= latent:
            summary, text = _summary_with_text(rng, style)
            add(day, summary, text)
            break
        clean = VisitSummary()
        add(day, clean, generate_report_text(clean, style, rng))

    if rng.random() < config.missingness_rate:
        masked = _MASKABLE_FIELDS[int(rng.integers(len(_MASKABLE_FIELDS)))]
        setattr(demo, masked, None)

    history = PatientHistory(patient_id=patient_id, demographics=demo,
                             visits=visits, colitis_or_crohns=False)
    truth = PatientGroundTruth(patient_id=patient_id, linear_predictor=eta,
                               hazard_per_day=rate,
                               latent_recurrence_day=latent)
    return history, truth, reports


def generate_cohort(config: SynthConfig):
    """Full synthetic cohort: (histories, ground truths, reports)."""
    config.validate()
    histories, truths, reports = [], [], []
    for i in range(config.n_patients):
        history, truth, patient_reports = generate_patient(i, config)
        histories.append(history)
        truths.append(truth)
        reports.extend(patient_reports)
    return histories, truths, reports
