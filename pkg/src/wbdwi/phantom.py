"""Synthetic multi-station WB-DWI phantoms with known ground truth.

The phantom body is an elliptical cylinder of marrow-like tissue holding a
skeleton column (where lesions live), a spinal-canal cylinder, and an organ
blob, all disjoint. Signals follow S(b) = S0 * exp(-b * ADC) plus optional
Gaussian noise, multiplied by planted per-station and per-scan gains.
Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import GridMeta, LabelVolume, RegionCode, ScalarVolume, StudyBundle
from .ingest import write_sidecar
from .nifti import write_nifti, write_nifti_labels

#: gADC floor separating marrow from lesion tissue (mm^2/s).
_ADC_FLOOR = 0.5e-3

RESPONSE_LABELS = ("responder", "stable", "progression")


@dataclass(frozen=True)
class TissueParams:
    s0: float
    adc: float  # mm^2/s


DEFAULT_TISSUES = {
    "air": TissueParams(0.0, 0.0),
    "marrow": TissueParams(120.0, 0.3e-3),
    "lesion": TissueParams(600.0, 0.9e-3),
    "canal": TissueParams(800.0, 2.5e-3),
    "organ": TissueParams(400.0, 1.5e-3),
}


@dataclass(frozen=True)
class LesionSpec:
    center_vox: tuple[float, float, float]  # (x, y, z) voxel indices
    radii_mm: tuple[float, float, float]
    adc: float | None = None  # overrides the lesion tissue default
    s0: float | None = None


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (48, 48, 60)
    spacing: tuple[float, float, float] = (2.0, 2.0, 5.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    n_stations: int = 3
    b_values: tuple[float, ...] = (50.0, 600.0, 900.0)
    tissues: dict = field(default_factory=lambda: dict(DEFAULT_TISSUES))
    lesions: tuple[LesionSpec, ...] = ()
    n_auto_lesions: int = 0  # used when no explicit lesions are given
    station_gains: tuple[float, ...] | None = None  # defaults to all 1.0
    scan_gain: float = 1.0
    noise_sigma: float = 0.0  # fraction of marrow S0
    snr_floor: float = 5.0
    seed: int = 0

    def __post_init__(self):
        marrow, lesion = self.tissues["marrow"], self.tissues["lesion"]
        if not marrow.adc < _ADC_FLOOR < lesion.adc:
            raise ValidationError(
                "tissue recipe must keep marrow ADC below the gADC floor and lesion ADC above"
            )
        if lesion.s0 <= marrow.s0:
            raise ValidationError("lesions must be hyperintense (lesion S0 > marrow S0)")
        if self.station_gains is not None and len(self.station_gains) != self.n_stations:
            raise ValidationError("station_gains length must equal n_stations")
        if self.noise_sigma > 0:
            b_max = max(self.b_values)
            lesion_sig = lesion.s0 * np.exp(-b_max * lesion.adc)
            snr = lesion_sig / (self.noise_sigma * marrow.s0)
            if snr < self.snr_floor:
                raise ValidationError(
                    f"lesion SNR at b={b_max:g} is {snr:.1f}, below the floor {self.snr_floor}"
                )


@dataclass(frozen=True)
class PhantomTruth:
    lesion_mask: ScalarVolume
    skeleton_prob: ScalarVolume
    canal_mask: ScalarVolume
    organ_mask: ScalarVolume
    region_labels: LabelVolume
    s0_map: ScalarVolume
    adc_map: ScalarVolume
    station_gains: tuple[float, ...]
    scan_gain: float
    lesions: tuple[LesionSpec, ...]
    response_label: str | None = None


def _index_grids(dims):
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    return x.astype(np.float64), y.astype(np.float64), z.astype(np.float64)


def _ellipse_cyl(x, y, cx, cy, rx, ry):
    return ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0


def _ellipsoid(x, y, z, center, radii_vox):
    cx, cy, cz = center
    rx, ry, rz = radii_vox
    return (
        ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 + ((z - cz) / rz) ** 2 <= 1.0
    )


def default_slabs(nz: int, n_stations: int) -> tuple[tuple[int, int], ...]:
    if n_stations < 1 or n_stations > nz:
        raise ValidationError(f"cannot split {nz} slices into {n_stations} stations")
    edges = np.linspace(0, nz, n_stations + 1).astype(int)
    return tuple((int(edges[i]), int(edges[i + 1] - 1)) for i in range(n_stations))


def _region_bands(nz: int):
    """z-band partition of the skeleton into the six region codes."""
    bands = [
        (RegionCode.LIMBS, 0.00, 0.25),
        (RegionCode.PELVIS, 0.25, 0.45),
        (RegionCode.LUMBAR_SPINE, 0.45, 0.60),
        (RegionCode.THORAX, 0.60, 0.70),
        (RegionCode.THORACIC_SPINE, 0.70, 0.85),
        (RegionCode.CERVICAL_SPINE, 0.85, 1.001),
    ]
    return [(code, int(np.floor(lo * nz)), int(np.floor(hi * nz))) for code, lo, hi in bands]


def _sample_lesions(
    spec: PhantomSpec,
    rng: np.random.Generator,
    n: int,
    existing: tuple[LesionSpec, ...] = (),
    radii_range: tuple[float, float] = (8.0, 12.0),
) -> tuple[LesionSpec, ...]:
    nx, ny, nz = spec.dims
    slabs = default_slabs(nz, spec.n_stations)
    gap_z = [z1 for z0, z1 in slabs[:-1]]
    sx, sy, sz = spec.spacing
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0
    sk_cx, sk_cy = cx, cy - 0.10 * ny
    lesions = list(existing)
    placed: list[LesionSpec] = []
    for _ in range(n):
        for attempt in range(400):
            margin = 4.0 if attempt < 200 else 1.0
            radii = tuple(rng.uniform(*radii_range, size=3))
            rz_vox = radii[2] / sz
            center = (
                sk_cx + rng.uniform(-0.14, 0.14) * nx,
                sk_cy + rng.uniform(-0.05, 0.05) * ny,
                rng.uniform(0.10 * nz, 0.90 * nz),
            )
            z_lo, z_hi = center[2] - rz_vox, center[2] + rz_vox
            # keep clear of station gaps so boundary medians stay gain-pure
            if any(z_lo - 4 <= g <= z_hi + 4 for g in gap_z):
                continue
            # separated along z or x so discrete blobs never merge
            if any(
                abs(center[2] - l.center_vox[2]) * sz < radii[2] + l.radii_mm[2] + margin
                and abs(center[0] - l.center_vox[0]) * sx < radii[0] + l.radii_mm[0] + margin
                for l in lesions
            ):
                continue
            lesion = LesionSpec(center, tuple(float(r) for r in radii))
            lesions.append(lesion)
            placed.append(lesion)
            break
        else:
            raise ValidationError("could not place a lesion away from gaps; spec too crowded")
    return tuple(placed)


def resolve_lesions(spec: PhantomSpec) -> tuple[LesionSpec, ...]:
    if spec.lesions:
        return spec.lesions
    if spec.n_auto_lesions:
        return _sample_lesions(spec, np.random.default_rng(spec.seed), spec.n_auto_lesions)
    return ()


def generate_phantom(spec: PhantomSpec) -> tuple[StudyBundle, PhantomTruth]:
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing
    meta = GridMeta(spec.dims, spec.spacing, spec.origin)
    x, y, z = _index_grids(spec.dims)
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0

    body = _ellipse_cyl(x, y, cx, cy, 0.45 * nx, 0.40 * ny)
    skeleton = _ellipse_cyl(x, y, cx, cy - 0.10 * ny, 0.20 * nx, 0.14 * ny) & body
    canal = _ellipse_cyl(x, y, cx, cy + 0.20 * ny, max(1.6, 0.05 * nx), max(1.6, 0.06 * ny)) & body
    organ_band = (z >= 0.40 * nz) & (z < 0.70 * nz)
    organ = (
        _ellipse_cyl(x, y, cx - 0.32 * nx, cy + 0.10 * ny, 0.10 * nx, 0.10 * ny)
        & body
        & organ_band
    )

    lesions = resolve_lesions(spec)
    lesion_mask = np.zeros(meta.shape_zyx, dtype=bool)
    adc_map = np.zeros(meta.shape_zyx)
    s0_map = np.zeros(meta.shape_zyx)

    t = spec.tissues
    s0_map[body] = t["marrow"].s0
    adc_map[body] = t["marrow"].adc
    s0_map[organ] = t["organ"].s0
    adc_map[organ] = t["organ"].adc
    s0_map[canal] = t["canal"].s0
    adc_map[canal] = t["canal"].adc
    for les in lesions:
        cxl, cyl, czl = les.center_vox
        radii_vox = (les.radii_mm[0] / sx, les.radii_mm[1] / sy, les.radii_mm[2] / sz)
        blob = _ellipsoid(x, y, z, (cxl, cyl, czl), radii_vox) & skeleton
        if not blob.any():
            raise ValidationError(f"lesion at {les.center_vox} lies outside the skeleton")
        lesion_mask |= blob
        s0_map[blob] = les.s0 if les.s0 is not None else t["lesion"].s0
        adc_map[blob] = les.adc if les.adc is not None else t["lesion"].adc

    slabs = default_slabs(nz, spec.n_stations)
    gains = spec.station_gains if spec.station_gains is not None else (1.0,) * spec.n_stations
    gain_z = np.empty(nz)
    for (z0, z1), g in zip(slabs, gains):
        gain_z[z0:z1 + 1] = g

    rng = np.random.default_rng(spec.seed)
    noise_sd = spec.noise_sigma * t["marrow"].s0
    b_volumes = []
    for b in spec.b_values:
        signal = s0_map * np.exp(-b * adc_map)
        if noise_sd > 0:
            signal = signal + rng.normal(0.0, noise_sd, size=signal.shape)
        signal = signal * gain_z[:, None, None] * spec.scan_gain
        b_volumes.append(ScalarVolume(meta, signal))

    region_data = np.zeros(meta.shape_zyx, dtype=np.int32)
    for code, z_lo, z_hi in _region_bands(nz):
        band = skeleton & (z >= z_lo) & (z < z_hi)
        region_data[band] = int(code)

    skeleton_prob = ScalarVolume(meta, np.where(skeleton, 0.95, 0.0))
    canal_vol = ScalarVolume(meta, canal.astype(np.float64))
    organ_vol = ScalarVolume(meta, organ.astype(np.float64))
    regions = LabelVolume(meta, region_data)

    bundle = StudyBundle(
        b_values=spec.b_values,
        b_volumes=tuple(b_volumes),
        station_slabs=slabs,
        skeleton_prob=skeleton_prob,
        canal_mask=canal_vol,
        organ_mask=organ_vol,
        region_labels=regions,
        timepoint_tag="pre",
    )
    truth = PhantomTruth(
        lesion_mask=ScalarVolume(meta, lesion_mask.astype(np.float64)),
        skeleton_prob=skeleton_prob,
        canal_mask=canal_vol,
        organ_mask=organ_vol,
        region_labels=regions,
        s0_map=ScalarVolume(meta, s0_map),
        adc_map=ScalarVolume(meta, adc_map),
        station_gains=tuple(float(g) for g in gains),
        scan_gain=float(spec.scan_gain),
        lesions=lesions,
    )
    return bundle, truth


# ---------------------------------------------------------------------------
# Pre/post cohorts with planted response labels


@dataclass(frozen=True)
class PatientCase:
    patient_id: str
    label: str
    pre_spec: PhantomSpec
    post_spec: PhantomSpec


def _scale_lesions(lesions, radii_factor: float, adc_factor: float) -> tuple[LesionSpec, ...]:
    out = []
    for les in lesions:
        adc = les.adc if les.adc is not None else DEFAULT_TISSUES["lesion"].adc
        out.append(replace(
            les,
            radii_mm=tuple(r * radii_factor for r in les.radii_mm),
            adc=adc * adc_factor,
        ))
    return tuple(out)


def plan_cohort(
    n_responders: int,
    n_stable: int,
    n_progression: int,
    template: PhantomSpec | None = None,
    seed: int = 0,
) -> list[PatientCase]:
    """Plant pre/post pairs whose true REC outcome is known by construction.

    Responders shrink lesions (dTDV well below -40%) and/or raise lesion ADC
    (d median gADC above +25%); progressors grow lesions or gain new ROIs
    above 3 mL; stable cases jitter within the no-change bands. Each
    timepoint gets its own station/scan gains so normalization always works.
    """
    template = template or PhantomSpec(dims=(48, 48, 100), n_stations=4, n_auto_lesions=3)
    if template.n_auto_lesions < 1 and not template.lesions:
        template = replace(template, n_auto_lesions=3)
    labels = (
        ["responder"] * n_responders + ["stable"] * n_stable + ["progression"] * n_progression
    )
    rng = np.random.default_rng(seed)
    cases: list[PatientCase] = []
    for i, label in enumerate(labels):
        pre_seed = int(rng.integers(0, 2**31 - 1))
        post_seed = int(rng.integers(0, 2**31 - 1))
        pre_spec = replace(
            template,
            seed=pre_seed,
            station_gains=tuple(rng.uniform(0.8, 1.3, size=template.n_stations)),
            scan_gain=float(rng.uniform(0.8, 1.2)),
        )
        lesions = resolve_lesions(pre_spec)
        pre_spec = replace(pre_spec, lesions=lesions, n_auto_lesions=0)

        if label == "responder":
            if i % 2 == 0:
                post_lesions = _scale_lesions(lesions, 0.70, 1.33)  # shrink + ADC rise
            else:
                post_lesions = _scale_lesions(lesions, 0.95, 1.33)  # ADC rise only
        elif label == "stable":
            post_lesions = _scale_lesions(
                lesions, float(rng.uniform(0.98, 1.02)), float(rng.uniform(0.99, 1.03))
            )
        else:  # progression
            if i % 2 == 0:
                post_lesions = _scale_lesions(lesions, 1.25, 1.0)  # TDV growth ~ +95%
            else:
                extras = _sample_lesions(
                    pre_spec,
                    np.random.default_rng(post_seed),
                    7,
                    existing=lesions,
                    radii_range=(10.5, 11.5),
                )
                post_lesions = lesions + extras  # >= +6 new ROIs above 3 mL

        post_spec = replace(
            pre_spec,
            seed=post_seed,
            lesions=post_lesions,
            station_gains=tuple(rng.uniform(0.8, 1.3, size=template.n_stations)),
            scan_gain=float(rng.uniform(1.0, 1.6)),
        )
        cases.append(PatientCase(f"patient_{i:03d}", label, pre_spec, post_spec))
    return cases


# ---------------------------------------------------------------------------
# Study-directory output consumable by the CLI


def write_study(study_dir, bundle: StudyBundle, truth: PhantomTruth, timepoint: str = "pre"):
    """Write NIfTI volumes + sidecar + truth masks in the standard layout."""
    study_dir = Path(study_dir)
    study_dir.mkdir(parents=True, exist_ok=True)
    meta = bundle.meta
    series_files = []
    for b, vol in zip(bundle.b_values, bundle.b_volumes):
        files = []
        for k, (z0, z1) in enumerate(bundle.station_slabs):
            name = f"b{b:g}_st{k}.nii"
            station_meta = GridMeta(
                (meta.dims[0], meta.dims[1], z1 - z0 + 1),
                meta.spacing,
                (meta.origin[0], meta.origin[1], meta.origin[2] + z0 * meta.spacing[2]),
            )
            write_nifti(ScalarVolume(station_meta, vol.data[z0:z1 + 1]), study_dir / name)
            files.append(name)
        series_files.append(files)
    masks = {
        "skeleton_prob": "skeleton_prob.nii",
        "canal": "canal.nii",
        "organs": "organs.nii",
        "regions": "regions.nii",
    }
    write_nifti(bundle.skeleton_prob, study_dir / masks["skeleton_prob"])
    write_nifti(bundle.canal_mask, study_dir / masks["canal"])
    write_nifti(bundle.organ_mask, study_dir / masks["organs"])
    write_nifti_labels(bundle.region_labels, study_dir / masks["regions"])
    write_sidecar(study_dir, bundle.b_values, series_files, bundle.station_slabs, masks, timepoint)

    truth_dir = study_dir / "truth"
    truth_dir.mkdir(exist_ok=True)
    write_nifti(truth.lesion_mask, truth_dir / "lesion_mask.nii")
    write_nifti(truth.s0_map, truth_dir / "s0.nii")
    write_nifti(truth.adc_map, truth_dir / "adc.nii")
    (truth_dir / "truth.json").write_text(json.dumps({
        "station_gains": list(truth.station_gains),
        "scan_gain": truth.scan_gain,
        "response_label": truth.response_label,
        "n_lesions": len(truth.lesions),
    }, indent=2) + "\n", encoding="utf-8")


def write_cohort(out_dir, cases: list[PatientCase]) -> dict:
    """Write per-patient pre/post study dirs plus a cohort index JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {"patients": []}
    for case in cases:
        pre_bundle, pre_truth = generate_phantom(case.pre_spec)
        post_bundle, post_truth = generate_phantom(case.post_spec)
        pre_truth = replace(pre_truth, response_label=case.label)
        post_truth = replace(post_truth, response_label=case.label)
        pre_dir = out_dir / case.patient_id / "pre"
        post_dir = out_dir / case.patient_id / "post"
        write_study(pre_dir, pre_bundle, pre_truth, "pre")
        write_study(post_dir, replace_timepoint(post_bundle, "post"), post_truth, "post")
        index["patients"].append({
            "id": case.patient_id,
            "label": case.label,
            "pre": str(pre_dir.relative_to(out_dir)),
            "post": str(post_dir.relative_to(out_dir)),
        })
    (out_dir / "cohort.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    return index


def replace_timepoint(bundle: StudyBundle, tag: str) -> StudyBundle:
    return StudyBundle(
        b_values=bundle.b_values,
        b_volumes=bundle.b_volumes,
        station_slabs=bundle.station_slabs,
        skeleton_prob=bundle.skeleton_prob,
        canal_mask=bundle.canal_mask,
        organ_mask=bundle.organ_mask,
        region_labels=bundle.region_labels,
        timepoint_tag=tag,
    )
