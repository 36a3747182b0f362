"""Tumour-burden biomarkers: TDV, log-TDV, gADC statistics, ROI size census."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import REGIONS, RegionCode
from .postprocess import LesionROI, LesionSet


@dataclass(frozen=True)
class GadcStats:
    mean: float
    median: float
    variance: float
    skewness: float | None  # undefined when variance is 0
    kurtosis: float | None  # non-excess (m4 / m2^2)


@dataclass(frozen=True)
class RegionStats:
    tdv_ml: float
    log_tdv: float | None  # undefined when tdv is 0
    gadc: GadcStats | None  # absent when the region holds no kept voxels
    roi_count: int
    roi_count_gt_1ml: int
    roi_count_gt_3ml: int


@dataclass(frozen=True)
class BiomarkerRecord:
    """Per-region statistics plus the WHOLE_SKELETON aggregate."""

    regions: dict[RegionCode, RegionStats]

    @property
    def whole(self) -> RegionStats:
        return self.regions[RegionCode.WHOLE_SKELETON]

    def to_json_dict(self) -> dict:
        out = {}
        for code in (RegionCode.WHOLE_SKELETON, *REGIONS):
            st = self.regions[code]
            entry = {
                "tdv_ml": st.tdv_ml,
                "log_tdv": st.log_tdv,
                "roi_count": st.roi_count,
                "roi_count_gt_1ml": st.roi_count_gt_1ml,
                "roi_count_gt_3ml": st.roi_count_gt_3ml,
            }
            if st.gadc is not None:
                entry["gadc"] = {
                    "mean": st.gadc.mean,
                    "median": st.gadc.median,
                    "variance": st.gadc.variance,
                    "skewness": st.gadc.skewness,
                    "kurtosis": st.gadc.kurtosis,
                }
            else:
                entry["gadc"] = None
            out[code.name] = entry
        return out


def compute_tdv(lesions: LesionSet, region: RegionCode = RegionCode.WHOLE_SKELETON) -> float:
    """Total kept-lesion volume in mL, optionally restricted to one region."""
    return sum(roi.volume_ml for roi in _select(lesions, region))


def log_tdv(tdv_ml: float) -> float | None:
    """Natural logarithm of TDV in mL; undefined (None) for tdv <= 0."""
    if tdv_ml <= 0:
        return None
    return math.log(tdv_ml)


def gadc_stats(values: np.ndarray) -> GadcStats | None:
    """Sample moments with denominator n; kurtosis is non-excess."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        return None
    mean = float(values.mean())
    median = float(np.median(values))
    centered = values - mean
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return GadcStats(mean, median, 0.0, None, None)
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    return GadcStats(mean, median, m2, m3 / m2**1.5, m4 / m2**2)


def roi_size_census(rois) -> tuple[int, int]:
    """Counts of ROIs strictly above 1 mL and strictly above 3 mL."""
    gt1 = sum(1 for roi in rois if roi.volume_ml > 1.0)
    gt3 = sum(1 for roi in rois if roi.volume_ml > 3.0)
    return gt1, gt3


def _select(lesions: LesionSet, region: RegionCode) -> list[LesionROI]:
    if region == RegionCode.WHOLE_SKELETON:
        return list(lesions.kept)
    return [roi for roi in lesions.kept if roi.region == region]


def _region_stats(rois: list[LesionROI]) -> RegionStats:
    tdv = sum(roi.volume_ml for roi in rois)
    values = (
        np.concatenate([roi.gadc_values for roi in rois]) if rois else np.empty(0)
    )
    gt1, gt3 = roi_size_census(rois)
    return RegionStats(
        tdv_ml=tdv,
        log_tdv=log_tdv(tdv),
        gadc=gadc_stats(values),
        roi_count=len(rois),
        roi_count_gt_1ml=gt1,
        roi_count_gt_3ml=gt3,
    )


def compute_biomarkers(lesions: LesionSet) -> BiomarkerRecord:
    regions = {code: _region_stats(_select(lesions, code)) for code in REGIONS}
    regions[RegionCode.WHOLE_SKELETON] = _region_stats(list(lesions.kept))
    return BiomarkerRecord(regions=regions)
