"""Command-line interface: one subcommand per pipeline stage plus the stats tools.

Exit codes: 0 success, 2 validation error (bad inputs/config), 3 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adcfit import compute_cdwi, fit_monoexponential
from .config import PipelineConfig, load_config
from .errors import StageError, ValidationError
from .grid import ScalarVolume
from .ingest import load_study
from .nifti import read_nifti, write_nifti, write_nifti_labels
from .normalize import normalize_b900
from .phantom import (
    LesionSpec,
    PhantomSpec,
    generate_phantom,
    plan_cohort,
    write_cohort,
    write_study,
)
from .pipeline import process_study, run_pipeline, run_single
from .report import render_markdown, write_report_json
from .response import Benefit, DeltaRecord, rec_classify
from .segment import segment_cnn
from .stats import CutoffGrid, diagnostic_accuracy, optimize_cutoffs, repeatability
from .wbw1 import load_weights


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--seed", type=int, help="seed for randomized statistics")
    parser.add_argument("--threads", type=int, help="worker threads (timepoints in parallel)")
    parser.add_argument("--backend", choices=("threshold", "cnn"), help="segmentation backend")
    parser.add_argument("--weights", help="WBW1 weight file for the cnn backend")


def _build_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "threads", None) is not None:
        config = replace(config, threads=args.threads)
    if getattr(args, "backend", None):
        config = replace(config, segment=replace(config.segment, backend=args.backend))
    if getattr(args, "weights", None):
        config = replace(config, weights_path=args.weights)
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_rows(path) -> list[dict]:
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        rows = doc if isinstance(doc, list) else doc.get("cases", [])
        return [dict(r) for r in rows]
    with open(path, newline="", encoding="utf-8") as fh:
        return [dict(r) for r in csv.DictReader(fh)]


def _parse_benefit(token: str) -> Benefit:
    norm = token.strip().lower().replace("_", "").replace("-", "")
    table = {
        "benefit": Benefit.BENEFIT,
        "nobenefit": Benefit.NO_BENEFIT,
        "review": Benefit.INDETERMINATE,
        "indeterminate": Benefit.INDETERMINATE,
    }
    if norm not in table:
        raise ValidationError(f"unknown Benefit label {token!r}")
    return table[norm]


def _delta_from_row(row: dict) -> DeltaRecord:
    def fnum(key):
        val = row.get(key, "")
        if val in ("", None, "na", "NA"):
            return None
        return float(val)

    return DeltaRecord(
        delta_tdv_pct=fnum("delta_tdv_pct"),
        delta_median_gadc_pct=fnum("delta_median_gadc_pct"),
        delta_roi_gt_1ml=int(float(row.get("delta_roi_gt_1ml", 0) or 0)),
        delta_roi_gt_3ml=int(float(row.get("delta_roi_gt_3ml", 0) or 0)),
    )


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_pipeline(args) -> int:
    config = _build_config(args)
    report = run_pipeline(args.pre, args.post, config, _out_dir(args))
    print(f"outcome: {report['response']['outcome']} ({report['response']['benefit']})")
    return 0


def _cmd_single(args) -> int:
    config = _build_config(args)
    fragment = run_single(args.study, config, _out_dir(args))
    print(f"TDV: {fragment['biomarkers']['WHOLE_SKELETON']['tdv_ml']:.3f} mL")
    return 0


def _cmd_fit_adc(args) -> int:
    config = _build_config(args)
    bundle = load_study(args.study)
    fit = fit_monoexponential(bundle, config.fit.adc_ceiling)
    out = _out_dir(args)
    write_nifti(fit.s0, out / "s0.nii")
    write_nifti(fit.gadc, out / "gadc.nii")
    write_nifti(fit.valid_mask, out / "fit_valid.nii")
    write_nifti(compute_cdwi(fit, config.normalize.b_target), out / "cdwi_b900.nii")
    return 0


def _cmd_normalize(args) -> int:
    config = _build_config(args)
    bundle = load_study(args.study)
    fit = fit_monoexponential(bundle, config.fit.adc_ceiling)
    norm = normalize_b900(
        fit,
        bundle,
        b_target=config.normalize.b_target,
        target=config.normalize.canal_target,
        boundary_slices=config.normalize.boundary_slices,
        noise_floor_frac=config.normalize.noise_floor_frac,
    )
    out = _out_dir(args)
    write_nifti(norm.normalized_b900, out / "norm_b900.nii")
    write_report_json(
        {
            "station_gains": list(norm.station_gains),
            "scan_gain": norm.scan_gain,
            "canal_median_before": norm.canal_median_before,
            "canal_median_after": norm.canal_median_after,
            "reference_station": norm.reference_station,
            "warnings": list(norm.warnings),
        },
        out / "normalization.json",
    )
    return 0


def _cmd_segment(args) -> int:
    config = _build_config(args)
    result = process_study(args.study, config)
    out = _out_dir(args)
    write_nifti(result.probability, out / "probability.nii")
    write_nifti_labels(result.lesions.label_volume(), out / "lesions.nii")
    return 0


def _cmd_postprocess(args) -> int:
    config = _build_config(args)
    result = process_study(args.study, config)
    out = _out_dir(args)
    write_nifti_labels(result.lesions.label_volume(), out / "lesions.nii")
    write_report_json(result.lesions.to_json_dict(), out / "lesions.json")
    return 0


def _cmd_quantify(args) -> int:
    config = _build_config(args)
    result = process_study(args.study, config)
    out = _out_dir(args)
    write_report_json(result.biomarkers.to_json_dict(), out / "biomarkers.json")
    print(f"TDV: {result.biomarkers.whole.tdv_ml:.3f} mL")
    return 0


def _cmd_respond(args) -> int:
    config = _build_config(args)
    rows = _read_rows(args.cases)
    if not rows:
        raise ValidationError(f"{args.cases}: no cases")
    outcomes = []
    for row in rows:
        rec = rec_classify(_delta_from_row(row), config.response)
        outcomes.append({
            "case_id": row.get("case_id", ""),
            **rec.to_json_dict(),
        })
    write_report_json({"cases": outcomes}, Path(args.out))
    return 0


def _cmd_repeatability(args) -> int:
    config = _build_config(args)
    rows = _read_rows(args.pairs)
    pairs = [(float(r["x1"]), float(r["x2"])) for r in rows]
    report = repeatability(pairs, n_boot=args.iterations, seed=config.seed)
    write_report_json(report.to_json_dict(), Path(args.out))
    return 0


def _cmd_accuracy(args) -> int:
    rows = _read_rows(args.cases)
    predicted = [_parse_benefit(r["predicted"]) for r in rows]
    reference = [_parse_benefit(r["reference"]) for r in rows]
    report = diagnostic_accuracy(
        predicted, reference, review_policy=args.review_policy, continuity=args.continuity
    )
    write_report_json(report.to_json_dict(), Path(args.out))
    acc = report.accuracy
    print(f"accuracy {acc.successes}/{acc.n} ({100 * acc.fraction:.1f}%)")
    return 0


def _cmd_optimize_cutoffs(args) -> int:
    config = _build_config(args)
    rows = _read_rows(args.cases)
    deltas = [_delta_from_row(r) for r in rows]
    reference = [_parse_benefit(r["reference"]) for r in rows]
    result = optimize_cutoffs(
        deltas, reference, grid=config.cutoff_grid, iterations=args.iterations, seed=config.seed
    )
    write_report_json(result.to_json_dict(), Path(args.out))
    print(
        f"responder: dTDV <= {result.responder_tdv_dec:+.1f}%, "
        f"dgADC >= {result.responder_gadc_inc:+.1f}% (J={result.responder_youden:.3f}); "
        f"progression: dTDV > {result.progression_tdv_inc:+.1f}% (J={result.progression_youden:.3f})"
    )
    return 0


def _lesion_from_doc(doc: dict) -> LesionSpec:
    return LesionSpec(
        center_vox=tuple(doc["center_vox"]),
        radii_mm=tuple(doc["radii_mm"]),
        adc=doc.get("adc"),
        s0=doc.get("s0"),
    )


def _spec_from_doc(doc: dict) -> PhantomSpec:
    kwargs = dict(doc)
    for key in ("dims", "spacing", "origin", "b_values", "station_gains"):
        if kwargs.get(key) is not None:
            kwargs[key] = tuple(kwargs[key])
    if "lesions" in kwargs:
        kwargs["lesions"] = tuple(_lesion_from_doc(l) for l in kwargs["lesions"])
    try:
        return PhantomSpec(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad phantom spec: {exc}") from exc


def _cmd_phantom(args) -> int:
    doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    out = _out_dir(args)
    if doc.get("kind", "single") == "cohort":
        plan = doc.get("plan", {})
        template = _spec_from_doc(doc["template"]) if "template" in doc else None
        cases = plan_cohort(
            int(plan.get("responders", 0)),
            int(plan.get("stable", 0)),
            int(plan.get("progression", 0)),
            template=template,
            seed=int(doc.get("seed", 0)),
        )
        index = write_cohort(out, cases)
        print(f"wrote {len(index['patients'])} patients to {out}")
    else:
        spec = _spec_from_doc(doc.get("spec", {}))
        bundle, truth = generate_phantom(spec)
        write_study(out, bundle, truth, doc.get("timepoint", "pre"))
        print(f"wrote study to {out}")
    return 0


def _cmd_report_render(args) -> int:
    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    md = render_markdown(doc)
    Path(args.out).write_text(md, encoding="utf-8")
    return 0


def _cmd_cnn_apply(args) -> int:
    config = _build_config(args)
    skeleton = read_nifti(args.skeleton)
    b900 = read_nifti(args.b900)
    weights = load_weights(args.weights)
    prob = segment_cnn(skeleton, b900, weights, config.segment)
    write_nifti(prob, Path(args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbdwi",
        description="Quantitative WB-DWI analysis: lesion delineation, TDV/gADC "
        "biomarkers, and treatment-response evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="process a pre/post study pair into a report")
    p.add_argument("pre")
    p.add_argument("post")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_pipeline)

    p = sub.add_parser("single", help="process one study into a report fragment")
    p.add_argument("study")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_single)

    p = sub.add_parser("fit-adc", help="write S0/gADC/cDWI maps for a study")
    p.add_argument("study")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_fit_adc)

    p = sub.add_parser("normalize", help="write the normalized b900 volume and gains")
    p.add_argument("study")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_normalize)

    p = sub.add_parser("segment", help="write the lesion probability map and mask")
    p.add_argument("study")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("postprocess", help="write curated lesion labels and JSON")
    p.add_argument("study")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_postprocess)

    p = sub.add_parser("quantify", help="write the biomarker record for a study")
    p.add_argument("study")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_quantify)

    p = sub.add_parser(
        "respond",
        help="classify cases from a deltas table "
        "(columns: case_id, delta_tdv_pct, delta_median_gadc_pct, "
        "delta_roi_gt_1ml, delta_roi_gt_3ml)",
    )
    p.add_argument("cases", help="CSV or JSON table of per-case deltas")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_respond)

    p = sub.add_parser(
        "repeatability",
        help="QIBA repeatability stats from replicate pairs (columns: subject, x1, x2)",
    )
    p.add_argument("pairs", help="CSV or JSON table of same-day replicate measurements")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=1000, help="bootstrap iterations")
    _add_common(p)
    p.set_defaults(fn=_cmd_repeatability)

    p = sub.add_parser(
        "accuracy",
        help="diagnostic accuracy vs a reference (columns: case_id, predicted, reference)",
    )
    p.add_argument("cases")
    p.add_argument("--out", required=True)
    p.add_argument("--review-policy", choices=("exclude", "no_benefit"), default="exclude")
    p.add_argument("--continuity", action="store_true", help="continuity-corrected Wilson CIs")
    p.set_defaults(fn=_cmd_accuracy)

    p = sub.add_parser(
        "optimize-cutoffs",
        help="bootstrap grid search for REC cutoffs "
        "(columns: case_id, delta_tdv_pct, delta_median_gadc_pct, reference)",
    )
    p.add_argument("cases")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=200)
    _add_common(p)
    p.set_defaults(fn=_cmd_optimize_cutoffs)

    p = sub.add_parser("phantom", help="generate synthetic studies from a spec JSON")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_phantom)

    p = sub.add_parser("report-render", help="render a report JSON to Markdown")
    p.add_argument("report")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_report_render)

    p = sub.add_parser(
        "cnn-apply",
        help="run the CNN backend directly on a (skeleton, b900) volume pair",
    )
    p.add_argument("--skeleton", required=True)
    p.add_argument("--b900", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_cnn_apply)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
