"""Mask curation: connected components, gADC/organ/size filters, region attribution.

The chain order is fixed: components -> gADC filter -> organ exclusion ->
minimum size -> region attribution. The first failing rule sets the single
exclusion reason for an ROI.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .grid import GridMeta, LabelVolume, RegionCode, ScalarVolume, voxel_volume_ml

logger = logging.getLogger("wbdwi")

#: Fraction of voxels below the gADC floor that flags an ROI as false positive.
GADC_FRACTION = 0.65
#: gADC floor in mm^2/s (fatty marrow / noise signature).
GADC_FLOOR = 0.5e-3
ORGAN_OVERLAP_MIN = 0.10
MIN_VOXELS = 10


@dataclass(frozen=True)
class LesionROI:
    label: int
    flat_indices: np.ndarray  # flat indices into the (nz, ny, nx) array
    volume_ml: float
    gadc_values: np.ndarray
    region: RegionCode | None = None
    excluded_reason: str | None = None  # low_gadc | organ_overlap | too_small

    @property
    def n_voxels(self) -> int:
        return int(self.flat_indices.size)


@dataclass(frozen=True)
class LesionSet:
    kept: tuple[LesionROI, ...]
    excluded: tuple[LesionROI, ...]
    meta: GridMeta
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def kept_mask(self) -> np.ndarray:
        mask = np.zeros(self.meta.n_voxels, dtype=bool)
        for roi in self.kept:
            mask[roi.flat_indices] = True
        return mask.reshape(self.meta.shape_zyx)

    def label_volume(self) -> LabelVolume:
        lab = np.zeros(self.meta.n_voxels, dtype=np.int32)
        for roi in self.kept:
            lab[roi.flat_indices] = roi.label
        return LabelVolume(self.meta, lab.reshape(self.meta.shape_zyx))

    def to_json_dict(self) -> dict:
        def roi_entry(roi: LesionROI) -> dict:
            return {
                "label": roi.label,
                "n_voxels": roi.n_voxels,
                "volume_ml": roi.volume_ml,
                "region": roi.region.name if roi.region is not None else None,
                "median_gadc": float(np.median(roi.gadc_values)) if roi.n_voxels else None,
                "excluded_reason": roi.excluded_reason,
            }

        return {
            "kept": [roi_entry(r) for r in self.kept],
            "excluded": [roi_entry(r) for r in self.excluded],
            "warnings": list(self.warnings),
        }


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValidationError(f"connectivity must be 6 or 26, got {connectivity}")


def connected_components(mask: np.ndarray, connectivity: int = 26) -> tuple[np.ndarray, int]:
    """Label connected components, numbered 1..N in first-voxel scan order."""
    mask = np.asarray(mask) > 0
    labeled, n = ndimage.label(mask, structure=_structure(connectivity))
    if n == 0:
        return labeled.astype(np.int32), 0
    flat = labeled.ravel()
    nz = np.nonzero(flat)[0]
    # renumber by order of first appearance in the flat scan
    _, first_pos = np.unique(flat[nz], return_index=True)
    order = np.argsort(first_pos, kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[np.arange(1, n + 1)[order]] = np.arange(1, n + 1, dtype=np.int32)
    return remap[labeled], n


def extract_rois(mask: ScalarVolume, gadc: ScalarVolume, connectivity: int = 26) -> list[LesionROI]:
    if mask.meta != gadc.meta:
        raise ValidationError("mask and gADC map must share one grid")
    labeled, n = connected_components(mask.data, connectivity)
    vox_ml = voxel_volume_ml(mask.meta)
    flat_labels = labeled.ravel()
    flat_gadc = gadc.data.ravel()
    nz = np.nonzero(flat_labels)[0]
    rois: list[LesionROI] = []
    if nz.size == 0:
        return rois
    order = np.argsort(flat_labels[nz], kind="stable")
    sorted_idx = nz[order]
    bounds = np.searchsorted(flat_labels[sorted_idx], np.arange(1, n + 2))
    for label in range(1, n + 1):
        idx = sorted_idx[bounds[label - 1]:bounds[label]]
        idx = np.sort(idx)
        rois.append(LesionROI(
            label=label,
            flat_indices=idx,
            volume_ml=idx.size * vox_ml,
            gadc_values=flat_gadc[idx],
        ))
    return rois


def filter_by_gadc(
    rois: list[LesionROI], fraction: float = GADC_FRACTION, adc_floor: float = GADC_FLOOR
) -> tuple[list[LesionROI], list[LesionROI]]:
    """Exclude ROIs whose share of voxels strictly below the floor reaches ``fraction``."""
    kept, excluded = [], []
    for roi in rois:
        below = float(np.count_nonzero(roi.gadc_values < adc_floor))
        if roi.n_voxels and below / roi.n_voxels >= fraction:
            excluded.append(replace(roi, excluded_reason="low_gadc"))
        else:
            kept.append(roi)
    return kept, excluded


def exclude_organ_overlap(
    rois: list[LesionROI], organ_mask: ScalarVolume, overlap_fraction_min: float = ORGAN_OVERLAP_MIN
) -> tuple[list[LesionROI], list[LesionROI]]:
    organ_flat = organ_mask.data.ravel() > 0.5
    kept, excluded = [], []
    for roi in rois:
        overlap = float(np.count_nonzero(organ_flat[roi.flat_indices])) / roi.n_voxels
        # threshold 0 means "any overlap": zero-overlap ROIs are always kept
        if overlap > 0 and overlap >= overlap_fraction_min:
            excluded.append(replace(roi, excluded_reason="organ_overlap"))
        else:
            kept.append(roi)
    return kept, excluded


def min_size_filter(
    rois: list[LesionROI], min_voxels: int = MIN_VOXELS
) -> tuple[list[LesionROI], list[LesionROI]]:
    kept, excluded = [], []
    for roi in rois:
        if roi.n_voxels >= min_voxels:
            kept.append(roi)
        else:
            excluded.append(replace(roi, excluded_reason="too_small"))
    return kept, excluded


def attribute_regions(
    rois: list[LesionROI], region_labels: LabelVolume
) -> tuple[list[LesionROI], list[str]]:
    """Assign each ROI the region with majority voxel overlap (lower code on ties)."""
    labels_flat = region_labels.data.ravel()
    out: list[LesionROI] = []
    warnings: list[str] = []
    for roi in rois:
        codes = labels_flat[roi.flat_indices]
        counts = np.bincount(codes, minlength=int(RegionCode.CERVICAL_SPINE) + 1)
        counts[0] = 0  # background voxels attribute to no region
        if counts.sum() == 0:
            warnings.append(f"ROI {roi.label} lies outside all region labels")
            out.append(replace(roi, region=RegionCode.WHOLE_SKELETON))
            continue
        code = int(np.argmax(counts))  # argmax takes the lowest index on ties
        out.append(replace(roi, region=RegionCode(code)))
    return out, warnings


def curate_mask(
    mask: ScalarVolume,
    gadc: ScalarVolume,
    organ_mask: ScalarVolume,
    region_labels: LabelVolume,
    connectivity: int = 26,
    gadc_fraction: float = GADC_FRACTION,
    gadc_floor: float = GADC_FLOOR,
    organ_overlap_min: float = ORGAN_OVERLAP_MIN,
    min_voxels: int = MIN_VOXELS,
) -> LesionSet:
    rois = extract_rois(mask, gadc, connectivity)
    kept, excluded = filter_by_gadc(rois, gadc_fraction, gadc_floor)
    kept, excl_organ = exclude_organ_overlap(kept, organ_mask, organ_overlap_min)
    kept, excl_small = min_size_filter(kept, min_voxels)
    kept, warnings = attribute_regions(kept, region_labels)
    for w in warnings:
        logger.warning(w)
    return LesionSet(
        kept=tuple(kept),
        excluded=tuple(excluded + excl_organ + excl_small),
        meta=mask.meta,
        warnings=tuple(warnings),
    )
