"""End-to-end pipeline: parse -> cohort -> screen -> cox -> forest.

Stages communicate exclusively through files in the output directory, so a
partial run resumes from the last completed stage and a forced single
stage (--stage) can rerun against existing upstream artifacts.  A manifest
records the configuration hash; artifacts produced under a different
configuration are never reused.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, io
from .cohort import (
    PatientHistory,
    VariableKind,
    assemble_dataset,
    build_cases,
)
from .cox import CoxConfig, fit_cox
from .errors import DegenerateLabelsError
from .forest import (
    ForestConfig,
    grow_forest,
    oob_concordance_error,
    oob_mortalities,
    save_forest,
    time_dependent_auc,
    variable_importance,
)
from .reports import ParserConfig, parse_and_summarize
from .survival import apply_common_censor, km_by_factor, screen_details
from .synth import SynthConfig, generate_cohort

STAGE_ORDER = ("synth", "parse", "cohort", "screen", "cox", "forest")
DATA_STAGES = ("parse", "cohort", "screen", "cox", "forest")


@dataclass
class PipelineConfig:
    output_dir: Path
    reports_jsonl: Path | None = None
    demographics_csv: Path | None = None
    synth: SynthConfig | None = None
    stages: tuple[str, ...] = DATA_STAGES
    screening_threshold: float = 0.2
    censor_quantile: float = 0.95
    auc_horizon_days: float = 1500.0
    forest: ForestConfig = field(default_factory=ForestConfig)
    parser: ParserConfig = field(default_factory=ParserConfig)
    seed: int = 0
    threads: int = 1
    render_svg: bool = False
    save_forest_dump: bool = True

    def __post_init__(self):
        file_inputs = self.reports_jsonl is not None
        if file_inputs == (self.synth is not None):
            raise ValueError("configure exactly one input source: "
                             "reports/demographics paths or a synth section")
        if file_inputs and self.demographics_csv is None:
            raise ValueError("file inputs require a demographics_csv")
        unknown = set(self.stages) - set(DATA_STAGES)
        if unknown:
            raise ValueError(f"unknown stages: {sorted(unknown)}")

    def semantic_dict(self) -> dict:
        """Fields that determine artifact content (paths and thread counts
        do not)."""
        payload = {
            "stages": list(self.stages),
            "screening_threshold": self.screening_threshold,
            "censor_quantile": self.censor_quantile,
            "auc_horizon_days": self.auc_horizon_days,
            "seed": self.seed,
            "forest": dataclasses.asdict(self.forest),
            "parser": {
                "unit_window": self.parser.unit_window,
                "count_cap": self.parser.count_cap,
                "range_markers": list(self.parser.range_markers),
            },
        }
        if self.synth is not None:
            synth = dataclasses.asdict(self.synth)
            synth["style_weights"] = list(synth["style_weights"])
            payload["synth"] = synth
        else:
            payload["inputs"] = {
                "reports_jsonl": str(self.reports_jsonl),
                "demographics_csv": str(self.demographics_csv),
            }
        return payload

    def config_hash(self) -> str:
        canonical = json.dumps(self.semantic_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path, out_override=None, seed_override=None,
                threads_override=None, render_svg=False) -> PipelineConfig:
    """Build a PipelineConfig from the JSON config file (schema in README)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    base = Path(path).parent

    synth = None
    reports = demographics = None
    if "synth" in raw:
        synth_raw = dict(raw["synth"])
        if "style_weights" in synth_raw:
            synth_raw["style_weights"] = tuple(synth_raw["style_weights"])
        if "planted_log_hazard_ratios" in synth_raw:
            synth_raw["planted_log_hazard_ratios"] = dict(
                synth_raw["planted_log_hazard_ratios"])
        synth = SynthConfig(**synth_raw)
    if "inputs" in raw:
        reports = base / raw["inputs"]["reports_jsonl"]
        demographics = base / raw["inputs"]["demographics_csv"]

    seed = seed_override if seed_override is not None else raw.get("seed", 0)
    if synth is not None:
        synth = dataclasses.replace(synth, seed=seed)

    out = Path(out_override) if out_override else base / raw.get(
        "output_dir", "out")
    forest = ForestConfig(seed=seed, **raw.get("forest", {}))
    parser = ParserConfig(**{k: tuple(v) if k == "range_markers" else v
                             for k, v in raw.get("parser", {}).items()})
    return PipelineConfig(
        output_dir=out,
        reports_jsonl=reports,
        demographics_csv=demographics,
        synth=synth,
        stages=tuple(raw.get("stages", DATA_STAGES)),
        screening_threshold=raw.get("screening_threshold", 0.2),
        censor_quantile=raw.get("censor_quantile", 0.95),
        auc_horizon_days=raw.get("auc_horizon_days", 1500.0),
        forest=forest,
        parser=parser,
        seed=seed,
        threads=threads_override if threads_override is not None
        else raw.get("threads", 1),
        render_svg=render_svg or raw.get("render_svg", False),
        save_forest_dump=raw.get("save_forest_dump", True),
    )


class _Paths:
    def __init__(self, out: Path):
        self.out = out
        self.reports = out / "reports.jsonl"
        self.demographics = out / "demographics.csv"
        self.ground_truth = out / "ground_truth.csv"
        self.extraction = out / "extraction.csv"
        self.dataset = out / "dataset.csv"
        self.dataset_schema = out / "dataset_schema.json"
        self.exclusions = out / "exclusions.csv"
        self.screening = out / "screening.json"
        self.cox_csv = out / "cox_forest_plot.csv"
        self.cox_json = out / "cox_fit.json"
        self.rsf_json = out / "rsf_fit.json"
        self.roc = out / "roc.csv"
        self.auc = out / "auc.json"
        self.vimp = out / "vimp.csv"
        self.forest_dump = out / "forest.json"
        self.manifest = out / "run_manifest.json"
        self.error = out / "error.json"

    def km_csv(self, variable: str) -> Path:
        return self.out / f"km_{variable}.csv"


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.paths = _Paths(config.output_dir)

    # -- input resolution ---------------------------------------------------

    def reports_path(self) -> Path:
        return (self.paths.reports if self.config.synth is not None
                else self.config.reports_jsonl)

    def demographics_path(self) -> Path:
        return (self.paths.demographics if self.config.synth is not None
                else self.config.demographics_csv)

    # -- stages -------------------------------------------------------------

    def stage_synth(self) -> list[Path]:
        histories, truths, reports = generate_cohort(self.config.synth)
        io.write_reports_jsonl(self.paths.reports, reports)
        io.write_demographics_csv(self.paths.demographics, histories)
        io.write_ground_truth_csv(self.paths.ground_truth, truths)
        return [self.paths.reports, self.paths.demographics,
                self.paths.ground_truth]

    def stage_parse(self) -> list[Path]:
        reports = io.read_reports_jsonl(self.reports_path())
        rows = [(r.patient_id, r.visit_date,
                 parse_and_summarize(r, self.config.parser)) for r in reports]
        io.write_extraction_csv(self.paths.extraction, rows)
        return [self.paths.extraction]

    def stage_cohort(self) -> list[Path]:
        rows = io.read_extraction_csv(self.paths.extraction)
        demo_map = io.read_demographics_csv(self.demographics_path())
        grouped: dict[str, list] = {}
        for patient_id, date, summary in rows:
            grouped.setdefault(patient_id, []).append((date, summary))
        histories = []
        for patient_id, visits in grouped.items():
            visits.sort(key=lambda item: item[0])
            demo, colitis = demo_map.get(patient_id, (None, False))
            if demo is None:
                from .cohort import Demographics
                demo = Demographics()
            histories.append(PatientHistory(
                patient_id=patient_id, demographics=demo, visits=visits,
                colitis_or_crohns=colitis))
        cases, excluded = build_cases(histories)
        io.write_exclusions_csv(self.paths.exclusions, excluded)
        dataset = assemble_dataset(cases)
        io.write_dataset_csv(self.paths.dataset, self.paths.dataset_schema,
                             dataset)
        return [self.paths.dataset, self.paths.dataset_schema,
                self.paths.exclusions]

    def _load_dataset(self):
        return io.read_dataset_csv(self.paths.dataset,
                                   self.paths.dataset_schema)

    def km_candidates(self, dataset) -> list[str]:
        """KM/screening factors: native factors plus median-binary bins."""
        return [s.name for s in dataset.schema
                if s.kind is VariableKind.FACTOR
                and not s.name.endswith("_tertile")]

    def stage_screen(self) -> list[Path]:
        dataset = self._load_dataset()
        censored = apply_common_censor(dataset, self.config.censor_quantile)
        candidates = self.km_candidates(dataset)
        produced = []
        for name in candidates:
            curves = km_by_factor(censored, name)
            path = self.paths.km_csv(name)
            io.write_km_csv(path, curves)
            produced.append(path)
            if self.config.render_svg:
                from . import figures
                figures.render_km(curves, path.with_suffix(".svg"),
                                  title=name)
        results = screen_details(censored, candidates,
                                 self.config.screening_threshold)
        io.write_screening_json(self.paths.screening, results,
                                self.config.screening_threshold)
        produced.append(self.paths.screening)
        return produced

    def cox_covariates(self, admitted) -> list[str]:
        """Swap screened discretized variants for their continuous parents."""
        out: list[str] = []
        for name in admitted:
            for suffix in ("_bin", "_tertile"):
                if name.endswith(suffix):
                    name = name[: -len(suffix)]
                    break
            if name not in out:
                out.append(name)
        return out

    def stage_cox(self) -> list[Path]:
        dataset = self._load_dataset()
        with open(self.paths.screening, encoding="utf-8") as fh:
            admitted = json.load(fh)["admitted"]
        covariates = self.cox_covariates(admitted)
        fit = None
        if covariates:
            fit = fit_cox(dataset, covariates, CoxConfig())
        io.write_cox_csv(self.paths.cox_csv, fit)
        io.write_cox_json(self.paths.cox_json, fit)
        if fit is not None and self.config.render_svg:
            from . import figures
            figures.render_forest_plot(fit,
                                       self.paths.cox_csv.with_suffix(".svg"))
        return [self.paths.cox_csv, self.paths.cox_json]

    def stage_forest(self) -> list[Path]:
        dataset = self._load_dataset()
        config = dataclasses.replace(self.config.forest,
                                     seed=self.config.seed)
        forest = grow_forest(dataset, config, n_jobs=self.config.threads)
        oob_error = oob_concordance_error(forest, dataset)
        io.write_rsf_json(self.paths.rsf_json, oob_error, config,
                          dataset.n_cases)
        produced = [self.paths.rsf_json]

        mortalities = oob_mortalities(forest, dataset)
        try:
            points, auc = time_dependent_auc(mortalities, dataset,
                                             self.config.auc_horizon_days)
            io.write_roc_csv(self.paths.roc, points)
            io.write_auc_json(self.paths.auc, auc,
                              self.config.auc_horizon_days)
            if self.config.render_svg:
                from . import figures
                figures.render_roc(points, auc,
                                   self.paths.roc.with_suffix(".svg"),
                                   self.config.auc_horizon_days)
        except (ValueError, DegenerateLabelsError) as err:
            io.write_roc_csv(self.paths.roc, [])
            io.write_auc_json(self.paths.auc, None,
                              self.config.auc_horizon_days, note=str(err))
        produced.extend([self.paths.roc, self.paths.auc])

        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self.config.seed, spawn_key=(2,)))
        importance = variable_importance(forest, dataset, rng)
        io.write_vimp_csv(self.paths.vimp, importance)
        produced.append(self.paths.vimp)
        if self.config.render_svg:
            from . import figures
            figures.render_vimp(importance,
                                self.paths.vimp.with_suffix(".svg"))
        if self.config.save_forest_dump:
            save_forest(forest, self.paths.forest_dump)
            produced.append(self.paths.forest_dump)
        return produced

    # -- orchestration ------------------------------------------------------

    def planned_stages(self) -> list[str]:
        stages = [s for s in DATA_STAGES if s in self.config.stages]
        if self.config.synth is not None:
            stages.insert(0, "synth")
        return stages

    def _stage_runner(self, name):
        return {
            "synth": self.stage_synth,
            "parse": self.stage_parse,
            "cohort": self.stage_cohort,
            "screen": self.stage_screen,
            "cox": self.stage_cox,
            "forest": self.stage_forest,
        }[name]

    def _load_manifest(self) -> dict:
        if not self.paths.manifest.exists():
            return {}
        try:
            with open(self.paths.manifest, encoding="utf-8") as fh:
                manifest = json.load(fh)
        except json.JSONDecodeError:
            return {}
        if manifest.get("config_hash") != self.config.config_hash():
            return {}
        return manifest

    def _write_manifest(self, completed: dict) -> None:
        payload = {
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "version": __version__,
            "config": self.config.semantic_dict(),
            "completed": {stage: [str(p) for p in paths]
                          for stage, paths in completed.items()},
        }
        with open(self.paths.manifest, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    def run(self, only_stage: str | None = None) -> int:
        """Run the planned stages, resuming past completed ones.

        Returns a process exit status; on failure an error JSON naming the
        failing stage is written to the output directory.
        """
        self.config.output_dir.mkdir(parents=True, exist_ok=True)
        if self.paths.error.exists():
            self.paths.error.unlink()
        manifest = self._load_manifest()
        completed = {
            stage: [Path(p) for p in paths]
            for stage, paths in manifest.get("completed", {}).items()
            if all(Path(p).exists() for p in paths)
        }

        if only_stage is not None:
            plan = [only_stage]
        else:
            plan = [s for s in self.planned_stages() if s not in completed]

        for stage in plan:
            try:
                produced = self._stage_runner(stage)()
            except Exception as err:  # pragma: no cover - error path
                with open(self.paths.error, "w", encoding="utf-8") as fh:
                    json.dump({"stage": stage,
                               "type": type(err).__name__,
                               "error": str(err),
                               "traceback": traceback.format_exc()},
                              fh, indent=2)
                    fh.write("\n")
                return 1
            completed[stage] = produced
            self._write_manifest(completed)
        return 0


def run(config: PipelineConfig, only_stage: str | None = None) -> int:
    return Pipeline(config).run(only_stage)
