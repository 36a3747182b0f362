"""Voxelwise mono-exponential diffusion fit and computed DWI synthesis.

Model: S(b) = S0 * exp(-b * ADC). The fit is an unweighted least-squares
line through ln S(b) vs b, which is exact for two b-values. Voxels with any
non-positive signal are marked invalid instead of being clamped, so noise
never fabricates high ADC values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import ScalarVolume, StudyBundle

#: Default ADC ceiling in mm^2/s, above free water at body temperature.
ADC_CEILING = 4.0e-3


@dataclass(frozen=True)
class FitResult:
    """S0 intercept map, gADC map (mm^2/s), and the fit validity mask."""

    s0: ScalarVolume
    gadc: ScalarVolume
    valid_mask: ScalarVolume

    @property
    def meta(self):
        return self.gadc.meta


def fit_monoexponential(bundle: StudyBundle, adc_ceiling: float = ADC_CEILING) -> FitResult:
    b = np.asarray(bundle.b_values, dtype=np.float64)
    if len(np.unique(b)) != len(b):
        raise ValidationError("b-values must be distinct")
    signals = np.stack([vol.data for vol in bundle.b_volumes], axis=0)

    valid = np.all(signals > 0.0, axis=0)
    log_s = np.zeros_like(signals)
    np.log(signals, out=log_s, where=signals > 0.0)

    b_mean = b.mean()
    b_centered = b - b_mean
    sxx = float(np.dot(b_centered, b_centered))
    # slope of ln S vs b, per voxel
    sxy = np.tensordot(b_centered, log_s, axes=([0], [0]))
    slope = sxy / sxx
    intercept = log_s.mean(axis=0) - slope * b_mean

    adc = np.clip(-slope, 0.0, adc_ceiling)
    s0 = np.exp(intercept)
    adc[~valid] = 0.0
    s0[~valid] = 0.0

    meta = bundle.meta
    return FitResult(
        s0=ScalarVolume(meta, s0),
        gadc=ScalarVolume(meta, adc),
        valid_mask=ScalarVolume(meta, valid.astype(np.float64)),
    )


def compute_cdwi(fit: FitResult, b_target: float) -> ScalarVolume:
    """Computed DWI at ``b_target``: S0 * exp(-b_target * gADC); invalid voxels are 0."""
    if not np.isfinite(b_target) or b_target <= 0:
        raise ValidationError(f"b_target must be > 0, got {b_target}")
    cdwi = fit.s0.data * np.exp(-b_target * fit.gadc.data)
    cdwi = cdwi * fit.valid_mask.data
    return ScalarVolume(fit.meta, cdwi)
