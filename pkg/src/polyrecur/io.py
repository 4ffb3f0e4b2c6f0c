"""File formats shared by the CLI stages.

Every CSV has a fixed documented header; floats are written with repr so
identical runs produce byte-identical files.  Empty string means missing
in the demographics CSV and in optional numeric columns.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
from dataclasses import asdict

import numpy as np

from .cohort import (
    Demographics,
    SurvivalDataset,
    VariableKind,
    VariableSpec,
)
from .reports import ColonoscopyReport, ColonSite, VisitSummary
from .survival import KMCurve, ScreenResult

SITE_COLUMNS = [site.value for site in ColonSite]

EXTRACTION_HEADER = (["patient_id", "visit_date", "polyp_count",
                      "mean_size_mm", "max_size_mm"] + SITE_COLUMNS)

DEMOGRAPHICS_HEADER = ["patient_id", "gender", "age_years", "bmi",
                       "height_cm", "weight_kg", "smoking_status",
                       "smoking_frequency", "race", "ethnicity",
                       "marital_status", "colitis_or_crohns"]


def fmt(value) -> str:
    """Deterministic cell formatting; None becomes the empty string."""
    if value is None:
        return ""
    if isinstance(value, float):
        return str(int(value)) if value == int(value) else repr(value)
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    return str(value)


def _open_write(path):
    return open(path, "w", encoding="utf-8", newline="")


def read_reports_jsonl(path) -> list[ColonoscopyReport]:
    reports = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            reports.append(ColonoscopyReport(
                patient_id=str(obj["patient_id"]),
                visit_date=_dt.date.fromisoformat(obj["visit_date"]),
                text=str(obj["text"])))
    return reports


def write_reports_jsonl(path, reports) -> None:
    with _open_write(path) as fh:
        for r in reports:
            fh.write(json.dumps({"patient_id": r.patient_id,
                                 "visit_date": r.visit_date.isoformat(),
                                 "text": r.text}) + "\n")


def write_demographics_csv(path, histories) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(DEMOGRAPHICS_HEADER)
        for h in histories:
            d = h.demographics
            writer.writerow([h.patient_id, fmt(d.gender), fmt(d.age_years),
                             fmt(d.bmi), fmt(d.height_cm), fmt(d.weight_kg),
                             fmt(d.smoking_status), fmt(d.smoking_frequency),
                             fmt(d.race), fmt(d.ethnicity),
                             fmt(d.marital_status),
                             fmt(h.colitis_or_crohns)])


def read_demographics_csv(path) -> dict:
    """patient_id -> (Demographics, colitis_or_crohns)."""
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            def opt(key):
                value = row.get(key, "")
                return value if value != "" else None

            def opt_float(key):
                value = opt(key)
                return float(value) if value is not None else None

            demo = Demographics(
                gender=opt("gender"), age_years=opt_float("age_years"),
                bmi=opt_float("bmi"), height_cm=opt_float("height_cm"),
                weight_kg=opt_float("weight_kg"),
                smoking_status=opt("smoking_status"),
                smoking_frequency=opt("smoking_frequency"),
                race=opt("race"), ethnicity=opt("ethnicity"),
                marital_status=opt("marital_status"))
            colitis = row.get("colitis_or_crohns", "0") in ("1", "true", "True")
            out[row["patient_id"]] = (demo, colitis)
    return out


def write_ground_truth_csv(path, truths) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["patient_id", "linear_predictor", "hazard_per_day",
                         "latent_recurrence_day"])
        for t in truths:
            writer.writerow([t.patient_id, fmt(t.linear_predictor),
                             fmt(t.hazard_per_day),
                             fmt(t.latent_recurrence_day)])


def write_extraction_csv(path, rows) -> None:
    """rows: iterable of (patient_id, visit_date, VisitSummary)."""
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(EXTRACTION_HEADER)
        for patient_id, date, summary in rows:
            record = [patient_id, date.isoformat(), fmt(summary.polyp_count),
                      fmt(summary.mean_size_mm), fmt(summary.max_size_mm)]
            for site in ColonSite:
                record.append(fmt(summary.location_counts.get(site, 0)))
            writer.writerow(record)


def read_extraction_csv(path):
    """-> list of (patient_id, visit_date, VisitSummary)."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            counts = {}
            for site in ColonSite:
                n = int(row[site.value])
                if n:
                    counts[site] = n
            summary = VisitSummary(
                polyp_count=int(row["polyp_count"]),
                mean_size_mm=(float(row["mean_size_mm"])
                              if row["mean_size_mm"] != "" else None),
                max_size_mm=(float(row["max_size_mm"])
                             if row["max_size_mm"] != "" else None),
                location_counts=counts)
            out.append((row["patient_id"],
                        _dt.date.fromisoformat(row["visit_date"]), summary))
    return out


def write_exclusions_csv(path, excluded) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["patient_id", "reason"])
        for history, reason in excluded:
            writer.writerow([history.patient_id, reason.value])


def write_dataset_csv(path, schema_path, dataset: SurvivalDataset) -> None:
    """Analysis dataset plus a sidecar schema JSON for exact reload."""
    names = [s.name for s in dataset.schema]
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["patient_id", "time_days", "event"] + names)
        for i in range(dataset.n_cases):
            row = [dataset.patient_ids[i], fmt(float(dataset.time_days[i])),
                   fmt(bool(dataset.event[i]))]
            for spec in dataset.schema:
                value = dataset.columns[spec.name][i]
                if spec.kind is VariableKind.FACTOR:
                    row.append(spec.levels[int(value)])
                else:
                    row.append(fmt(float(value)))
            writer.writerow(row)
    with _open_write(schema_path) as fh:
        json.dump({
            "n_dropped_missing": dataset.n_dropped_missing,
            "variables": [{"name": s.name, "kind": s.kind.value,
                           "levels": list(s.levels)}
                          for s in dataset.schema],
        }, fh, indent=2)
        fh.write("\n")


def read_dataset_csv(path, schema_path) -> SurvivalDataset:
    with open(schema_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    schema = [VariableSpec(v["name"], VariableKind(v["kind"]),
                           tuple(v["levels"])) for v in meta["variables"]]
    ids, times, events = [], [], []
    raw = {s.name: [] for s in schema}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            ids.append(row["patient_id"])
            times.append(float(row["time_days"]))
            events.append(row["event"] == "1")
            for s in schema:
                raw[s.name].append(row[s.name])
    columns = {}
    for s in schema:
        if s.kind is VariableKind.FACTOR:
            index = {lvl: i for i, lvl in enumerate(s.levels)}
            columns[s.name] = np.asarray([index[v] for v in raw[s.name]],
                                         dtype=np.int64)
        else:
            columns[s.name] = np.asarray([float(v) for v in raw[s.name]])
    return SurvivalDataset(
        patient_ids=ids, time_days=np.asarray(times),
        event=np.asarray(events, dtype=bool), schema=schema, columns=columns,
        n_dropped_missing=int(meta["n_dropped_missing"]))


def write_km_csv(path, curves: dict[str, KMCurve]) -> None:
    """KM curves of one factor; a time-0 row anchors each group at 1.0."""
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "survival", "n_risk", "n_event", "group"])
        for group, curve in curves.items():
            writer.writerow(["0", "1", fmt(curve.n_total), "0", group])
            for t, s, n, d in zip(curve.times, curve.survival,
                                  curve.n_at_risk, curve.n_events):
                writer.writerow([fmt(float(t)), fmt(float(s)),
                                 fmt(float(n)), fmt(float(d)), group])


def write_screening_json(path, results: list[ScreenResult],
                         threshold: float) -> None:
    payload = {
        "threshold": threshold,
        "variables": [asdict(r) for r in results],
        "admitted": [r.variable for r in results if r.admitted],
    }
    with _open_write(path) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_cox_csv(path, fit) -> None:
    """Forest-plot data: one row per coded covariate."""
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["covariate", "rr", "ci_low", "ci_high", "p"])
        if fit is None:
            return
        for name in fit.covariates:
            rr, lo, hi = fit.risk_ratios[name]
            writer.writerow([name, fmt(rr), fmt(lo), fmt(hi),
                             fmt(fit.wald_p[name])])


def write_cox_json(path, fit, covariates=None) -> None:
    if fit is None:
        payload = {"fitted": False,
                   "reason": "no variables admitted by screening"}
    else:
        payload = {
            "fitted": True,
            "variables": fit.variables,
            "covariates": fit.covariates,
            "coefficients": fit.coefficients,
            "standard_errors": fit.standard_errors,
            "covariance": fit.covariance.tolist(),
            "risk_ratios": {k: list(v) for k, v in fit.risk_ratios.items()},
            "wald_p": fit.wald_p,
            "global_chi_square": fit.global_chi_square,
            "global_df": fit.global_df,
            "global_p": fit.global_p,
            "log_likelihood": fit.log_likelihood,
            "null_log_likelihood": fit.null_log_likelihood,
            "iterations_used": fit.iterations_used,
            "converged": fit.converged,
            "monotone_likelihood": fit.monotone_likelihood,
        }
    with _open_write(path) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_roc_csv(path, points) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for f, t, thr in points:
            writer.writerow([fmt(f), fmt(t),
                             "inf" if thr == float("inf") else fmt(thr)])


def write_auc_json(path, auc, horizon_days, note="") -> None:
    payload = {"horizon_days": horizon_days, "auc": auc}
    if note:
        payload["note"] = note
    with _open_write(path) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_vimp_csv(path, importance: dict[str, float]) -> None:
    """Permutation importances with the log10(|vimp|) ranking column."""
    with _open_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "vimp", "log10_abs_vimp"])
        for name, value in sorted(importance.items(),
                                  key=lambda kv: -abs(kv[1])):
            log10 = (np.log10(abs(value)) if value != 0.0 else None)
            writer.writerow([name, fmt(float(value)),
                             fmt(float(log10)) if log10 is not None else ""])


def write_rsf_json(path, oob_error, config, n_cases) -> None:
    payload = {
        "oob_concordance_error": oob_error,
        "n_cases": n_cases,
        "config": {
            "n_trees": config.n_trees,
            "mtry": config.mtry,
            "min_node_events": config.min_node_events,
            "min_node_size": config.min_node_size,
            "n_split_candidates": config.n_split_candidates,
            "seed": config.seed,
        },
    }
    with _open_write(path) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
