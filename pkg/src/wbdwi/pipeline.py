"""End-to-end orchestration: study dir -> biomarkers -> response classification."""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .adcfit import compute_cdwi, fit_monoexponential
from .biomarkers import BiomarkerRecord, compute_biomarkers
from .config import PipelineConfig
from .errors import StageError, ValidationError, WbdwiError
from .grid import ScalarVolume, StudyBundle
from .ingest import load_study
from .nifti import write_nifti, write_nifti_labels
from .normalize import NormalizationResult, normalize_b900
from .postprocess import LesionSet, curate_mask
from .report import write_report_json, write_report_markdown
from .response import compute_deltas, rec_classify
from .segment import binarize, segment_cnn, segment_threshold
from .wbw1 import load_weights


@dataclass
class TimepointResult:
    study_dir: Path
    bundle: StudyBundle
    normalization: NormalizationResult
    gadc: ScalarVolume
    norm_b900: ScalarVolume
    probability: ScalarVolume
    lesions: LesionSet
    biomarkers: BiomarkerRecord
    timings: dict[str, float]

    def fragment(self) -> dict:
        lesion_counts: dict[str, int] = {}
        for roi in self.lesions.excluded:
            lesion_counts[roi.excluded_reason] = lesion_counts.get(roi.excluded_reason, 0) + 1
        return {
            "timepoint": self.bundle.timepoint_tag,
            "study_dir": str(self.study_dir),
            "biomarkers": self.biomarkers.to_json_dict(),
            "normalization": {
                "station_gains": list(self.normalization.station_gains),
                "scan_gain": self.normalization.scan_gain,
                "canal_median_before": self.normalization.canal_median_before,
                "canal_median_after": self.normalization.canal_median_after,
                "reference_station": self.normalization.reference_station,
                "warnings": list(self.normalization.warnings),
            },
            "lesions": {
                "n_kept": len(self.lesions.kept),
                "n_excluded": len(self.lesions.excluded),
                "excluded_by_reason": lesion_counts,
                "rois": self.lesions.to_json_dict()["kept"],
            },
        }


def study_content_hash(study_dir) -> str:
    """SHA-256 over the sidecar and every volume file, order-independent."""
    study_dir = Path(study_dir)
    digest = hashlib.sha256()
    for path in sorted(study_dir.rglob("*")):
        if path.is_file():
            digest.update(path.relative_to(study_dir).as_posix().encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()[:16]


def _stage(timings: dict, name: str):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()

        def __exit__(self, exc_type, exc, tb):
            timings[name] = time.perf_counter() - self.t0
            return False

    return _Timer()


def process_study(study_dir, config: PipelineConfig) -> TimepointResult:
    """Run one timepoint through assemble -> fit -> normalize -> segment -> curate."""
    timings: dict[str, float] = {}
    study_dir = Path(study_dir)
    with _stage(timings, "assemble"):
        bundle = load_study(study_dir)

    with _stage(timings, "fit"):
        try:
            fit = fit_monoexponential(bundle, config.fit.adc_ceiling)
        except ValidationError as exc:
            raise StageError("fit", str(exc)) from exc

    with _stage(timings, "normalize"):
        norm = normalize_b900(
            fit,
            bundle,
            b_target=config.normalize.b_target,
            target=config.normalize.canal_target,
            boundary_slices=config.normalize.boundary_slices,
            noise_floor_frac=config.normalize.noise_floor_frac,
        )

    with _stage(timings, "segment"):
        try:
            if config.segment.backend == "cnn":
                if not config.weights_path:
                    raise ValidationError("cnn backend requires weights_path")
                weights = load_weights(config.weights_path)
                prob = segment_cnn(
                    bundle.skeleton_prob, norm.normalized_b900, weights, config.segment
                )
            else:
                prob = segment_threshold(
                    bundle.skeleton_prob, norm.normalized_b900, config.segment
                )
            mask = binarize(prob, config.segment.binarize_threshold)
        except ValidationError as exc:
            raise StageError("segment", str(exc)) from exc

    with _stage(timings, "postprocess"):
        lesions = curate_mask(
            mask,
            fit.gadc,
            bundle.organ_mask,
            bundle.region_labels,
            connectivity=config.postprocess.connectivity,
            gadc_fraction=config.postprocess.gadc_fraction,
            gadc_floor=config.postprocess.gadc_floor,
            organ_overlap_min=config.postprocess.organ_overlap_min,
            min_voxels=config.postprocess.min_voxels,
        )

    with _stage(timings, "biomarkers"):
        biomarkers = compute_biomarkers(lesions)

    return TimepointResult(
        study_dir=study_dir,
        bundle=bundle,
        normalization=norm,
        gadc=fit.gadc,
        norm_b900=norm.normalized_b900,
        probability=prob,
        lesions=lesions,
        biomarkers=biomarkers,
        timings=timings,
    )


def _write_timepoint_artifacts(result: TimepointResult, out_dir: Path, tag: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_nifti_labels(result.lesions.label_volume(), out_dir / f"{tag}_lesions.nii")
    write_nifti(result.gadc, out_dir / f"{tag}_gadc.nii")
    write_nifti(result.norm_b900, out_dir / f"{tag}_norm_b900.nii")


def run_single(study_dir, config: PipelineConfig, out_dir=None) -> dict:
    """Process one study; returns (and optionally writes) its report fragment."""
    result = process_study(study_dir, config)
    fragment = result.fragment()
    fragment["input_hash"] = study_content_hash(study_dir)
    fragment["config_hash"] = config.content_hash()
    fragment["backend"] = config.segment.backend
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        tag = result.bundle.timepoint_tag
        _write_timepoint_artifacts(result, out_dir, tag)
        write_report_json(fragment, out_dir / f"{tag}_fragment.json")
        _write_run_meta(out_dir / f"{tag}_run.json", {tag: result.timings})
    return fragment


def run_pipeline(pre_dir, post_dir, config: PipelineConfig, out_dir=None) -> dict:
    """Process a pre/post pair and produce the full structured report.

    The two timepoints run concurrently when config.threads > 1; results and
    report bytes do not depend on the thread count. If one timepoint fails
    mid-pipeline, the other's fragment is still written before the stage
    error propagates.
    """
    wall0 = time.perf_counter()
    outcomes: dict[str, TimepointResult | Exception] = {}

    def run(tag: str, path) -> None:
        try:
            outcomes[tag] = process_study(path, config)
        except WbdwiError as exc:
            outcomes[tag] = exc

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            for _ in pool.map(lambda args: run(*args), (("pre", pre_dir), ("post", post_dir))):
                pass
    else:
        run("pre", pre_dir)
        run("post", post_dir)

    failures = {tag: r for tag, r in outcomes.items() if isinstance(r, Exception)}
    if failures:
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for tag, result in outcomes.items():
                if not isinstance(result, Exception):
                    fragment = result.fragment()
                    write_report_json(fragment, out / f"{tag}_fragment.json")
                    _write_timepoint_artifacts(result, out, tag)
        tag, exc = next(iter(failures.items()))
        if isinstance(exc, StageError):
            raise StageError(exc.stage, f"{tag} study: {exc}") from exc
        raise exc

    pre, post = outcomes["pre"], outcomes["post"]
    deltas = compute_deltas(pre.biomarkers, post.biomarkers)
    outcome = rec_classify(deltas, config.response)

    report = {
        "schema_version": 1,
        "tool": {"name": "wbdwi", "version": __version__},
        "config_hash": config.content_hash(),
        "seed": config.seed,
        "backend": config.segment.backend,
        "inputs": {
            "pre": {"path": str(pre_dir), "content_hash": study_content_hash(pre_dir)},
            "post": {"path": str(post_dir), "content_hash": study_content_hash(post_dir)},
        },
        "timepoints": {"pre": pre.fragment(), "post": post.fragment()},
        "deltas": deltas.to_json_dict(),
        "response": outcome.to_json_dict(),
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report_json(report, out / "report.json")
        write_report_markdown(report, out / "report.md")
        _write_timepoint_artifacts(pre, out, "pre")
        _write_timepoint_artifacts(post, out, "post")
        _write_run_meta(out / "run.json", {
            "pre": pre.timings,
            "post": post.timings,
            "wall_total_s": time.perf_counter() - wall0,
        })
    return report


def _write_run_meta(path, timings: dict) -> None:
    # volatile (non-reproducible) data is kept out of report.json on purpose
    import json

    Path(path).write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
