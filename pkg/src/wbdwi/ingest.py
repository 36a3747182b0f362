"""Study-directory ingestion: sidecar manifest parsing and station assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import (
    GridMeta,
    LabelVolume,
    ScalarVolume,
    StudyBundle,
    TIMEPOINT_TAGS,
    resample_labels,
    resample_to_grid,
)
from .nifti import read_nifti, read_nifti_labels

SIDECAR_NAME = "sidecar.json"
SIDECAR_VERSION = 1
_TOP_KEYS = {"sidecar_version", "bvalues", "series", "stations", "masks", "timepoint"}
_MASK_KEYS = {"skeleton_prob", "canal", "organs", "regions"}


@dataclass(frozen=True)
class SidecarManifest:
    """Parsed sidecar: b-values, per-b-value file lists, slabs, and mask paths."""

    base_dir: Path
    b_values: tuple[float, ...]
    series_files: tuple[tuple[str, ...], ...]  # aligned with b_values
    station_slabs: tuple[tuple[int, int], ...]
    mask_paths: dict
    timepoint_tag: str

    def path(self, name: str) -> Path:
        return self.base_dir / name


def load_manifest(study_dir) -> SidecarManifest:
    study_dir = Path(study_dir)
    sidecar = study_dir / SIDECAR_NAME
    if not sidecar.is_file():
        raise ValidationError(f"{study_dir}: missing {SIDECAR_NAME}")
    try:
        doc = json.loads(sidecar.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{sidecar}: invalid JSON ({exc})") from exc

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"{sidecar}: unknown keys {sorted(unknown)}")
    if doc.get("sidecar_version") != SIDECAR_VERSION:
        raise ValidationError(f"{sidecar}: unsupported sidecar_version {doc.get('sidecar_version')}")

    b_values = tuple(float(b) for b in doc.get("bvalues", ()))
    if len(b_values) < 2:
        raise ValidationError(f"{sidecar}: insufficient b-values (need at least 2)")
    if any(b2 <= b1 for b1, b2 in zip(b_values, b_values[1:])):
        raise ValidationError(f"{sidecar}: b-values must be strictly ascending")

    series = doc.get("series", [])
    by_b = {float(entry["b"]): tuple(entry["files"]) for entry in series}
    if set(by_b) != set(b_values):
        raise ValidationError(f"{sidecar}: series entries do not match bvalues")
    series_files = tuple(by_b[b] for b in b_values)

    slabs = tuple((int(s["z_start"]), int(s["z_end"])) for s in doc.get("stations", ()))
    if not slabs:
        raise ValidationError(f"{sidecar}: no station slabs declared")

    masks = doc.get("masks", {})
    if set(masks) != _MASK_KEYS:
        raise ValidationError(f"{sidecar}: masks must declare exactly {sorted(_MASK_KEYS)}")

    timepoint = doc.get("timepoint", "pre")
    if timepoint not in TIMEPOINT_TAGS:
        raise ValidationError(f"{sidecar}: timepoint must be one of {TIMEPOINT_TAGS}")

    manifest = SidecarManifest(
        base_dir=study_dir,
        b_values=b_values,
        series_files=series_files,
        station_slabs=slabs,
        mask_paths=dict(masks),
        timepoint_tag=timepoint,
    )
    for files in manifest.series_files:
        for name in files:
            if not manifest.path(name).is_file():
                raise ValidationError(f"{study_dir}: referenced file {name!r} does not exist")
    for name in manifest.mask_paths.values():
        if not manifest.path(name).is_file():
            raise ValidationError(f"{study_dir}: referenced mask {name!r} does not exist")
    return manifest


def write_sidecar(study_dir, b_values, series_files, station_slabs, mask_paths, timepoint) -> Path:
    doc = {
        "sidecar_version": SIDECAR_VERSION,
        "bvalues": list(b_values),
        "series": [
            {"b": b, "files": list(files)} for b, files in zip(b_values, series_files)
        ],
        "stations": [{"z_start": z0, "z_end": z1} for z0, z1 in station_slabs],
        "masks": dict(mask_paths),
        "timepoint": timepoint,
    }
    path = Path(study_dir) / SIDECAR_NAME
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def _stack_stations(vols: list[ScalarVolume], slabs, b: float) -> ScalarVolume:
    first = vols[0]
    nx, ny, _ = first.meta.dims
    for vol, (z0, z1) in zip(vols, slabs):
        if vol.meta.dims[0] != nx or vol.meta.dims[1] != ny:
            raise ValidationError(f"b={b:g}: station in-plane grids differ")
        if vol.meta.spacing[:2] != first.meta.spacing[:2]:
            raise ValidationError(f"b={b:g}: station in-plane spacings differ")
        if vol.meta.dims[2] != z1 - z0 + 1:
            raise ValidationError(
                f"b={b:g}: station file has {vol.meta.dims[2]} slices, slab ({z0},{z1}) "
                f"expects {z1 - z0 + 1}"
            )
    nz = slabs[-1][1] + 1
    meta = GridMeta((nx, ny, nz), first.meta.spacing, first.meta.origin)
    data = np.concatenate([v.data for v in vols], axis=0)
    return ScalarVolume(meta, data)


def assemble_stations(manifest: SidecarManifest) -> StudyBundle:
    """Assemble per-station series into whole-body volumes on the highest-b grid.

    Pre-concatenated whole-body files (one file per b-value) pass through
    unchanged. Lower-b volumes are trilinearly resampled when their grid
    differs from the highest-b grid; masks are resampled nearest.
    """
    slabs = manifest.station_slabs
    whole: list[ScalarVolume] = []
    for b, files in zip(manifest.b_values, manifest.series_files):
        vols = [read_nifti(manifest.path(f)) for f in files]
        if len(files) == 1:
            whole.append(vols[0])
        elif len(files) == len(slabs):
            whole.append(_stack_stations(vols, slabs, b))
        else:
            raise ValidationError(
                f"b={b:g}: {len(files)} files for {len(slabs)} stations "
                "(need one per station or a single whole-body file)"
            )

    ref_meta = whole[-1].meta  # highest b-value defines the grid
    aligned = [
        vol if vol.meta == ref_meta else resample_to_grid(vol, ref_meta, "trilinear")
        for vol in whole
    ]

    def load_mask(key: str) -> ScalarVolume:
        vol = read_nifti(manifest.path(manifest.mask_paths[key]))
        if vol.meta != ref_meta:
            vol = resample_to_grid(vol, ref_meta, "nearest")
        return vol

    skeleton = load_mask("skeleton_prob")
    canal = load_mask("canal")
    organs = load_mask("organs")
    regions = read_nifti_labels(manifest.path(manifest.mask_paths["regions"]))
    if regions.meta != ref_meta:
        regions = resample_labels(regions, ref_meta)

    return StudyBundle(
        b_values=manifest.b_values,
        b_volumes=tuple(aligned),
        station_slabs=slabs,
        skeleton_prob=skeleton,
        canal_mask=canal,
        organ_mask=organs,
        region_labels=regions,
        timepoint_tag=manifest.timepoint_tag,
    )


def load_study(study_dir) -> StudyBundle:
    return assemble_stations(load_manifest(study_dir))
