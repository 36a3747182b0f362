"""Two-stage intensity normalization of computed b900 images.

Stage 1 equalizes gains between stations by matching medians of foreground
voxels in the slices on either side of each station gap; stage 2 rescales
the whole scan so the median inside the spinal-canal mask hits a canonical
target. Median-ratio matching is exact for pure-gain corruptions and keeps
both stages monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adcfit import FitResult, compute_cdwi
from .errors import NormalizationError, ValidationError
from .grid import ScalarVolume, StudyBundle

#: Canonical inter-scan target for the canal median, in normalized units.
CANAL_TARGET = 1000.0
#: Boundary slices per side used for inter-station gain estimation.
BOUNDARY_SLICES = 3
#: Foreground threshold: fraction of a slice's 99th-percentile intensity.
NOISE_FLOOR_FRAC = 0.05


@dataclass(frozen=True)
class NormalizationResult:
    normalized_b900: ScalarVolume
    station_gains: tuple[float, ...]
    scan_gain: float
    canal_median_before: float
    canal_median_after: float
    reference_station: int
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _boundary_median(data: np.ndarray, z_indices: np.ndarray, floor_frac: float) -> float | None:
    """Median of foreground voxels over the given slices; None when empty."""
    values = []
    for z in z_indices:
        sl = data[z]
        p99 = np.percentile(sl, 99)
        if p99 <= 0:
            continue
        fg = sl[sl > floor_frac * p99]
        if fg.size:
            values.append(fg)
    if not values:
        return None
    med = float(np.median(np.concatenate(values)))
    return med if med > 0 else None


def interstation_equalize(
    cdwi: ScalarVolume,
    slabs,
    reference_station: int,
    boundary_slices: int = BOUNDARY_SLICES,
    noise_floor_frac: float = NOISE_FLOOR_FRAC,
) -> tuple[ScalarVolume, tuple[float, ...], tuple[str, ...]]:
    """Equalize per-station gains; returns (volume, per-station gains, warnings).

    Gains propagate multiplicatively outward from the reference station,
    whose gain is fixed at 1. Each gap contributes the ratio of foreground
    medians of the ``boundary_slices`` slices on either side.
    """
    slabs = [(int(a), int(b)) for a, b in slabs]
    n = len(slabs)
    if not 0 <= reference_station < n:
        raise ValidationError(f"reference station {reference_station} out of range (n={n})")
    data = cdwi.data
    gains = [1.0] * n
    warnings: list[str] = []

    def gap_ratio(upper_station: int) -> float:
        """median(lower-side slices) / median(upper-side slices) across one gap."""
        lo_z1 = slabs[upper_station - 1][1]
        hi_z0 = slabs[upper_station][0]
        k = boundary_slices
        lo_idx = np.arange(max(slabs[upper_station - 1][0], lo_z1 - k + 1), lo_z1 + 1)
        hi_idx = np.arange(hi_z0, min(slabs[upper_station][1], hi_z0 + k - 1) + 1)
        lo_med = _boundary_median(data, lo_idx, noise_floor_frac)
        hi_med = _boundary_median(data, hi_idx, noise_floor_frac)
        if lo_med is None or hi_med is None:
            warnings.append(
                f"gap between stations {upper_station - 1} and {upper_station}: "
                "no foreground voxels, gain defaulted to 1"
            )
            return 1.0
        return lo_med / hi_med

    # Upward from the reference: station s is matched to its lower neighbour.
    for s in range(reference_station + 1, n):
        gains[s] = gains[s - 1] * gap_ratio(s)
    # Downward from the reference: station s is matched to its upper neighbour.
    for s in range(reference_station - 1, -1, -1):
        gains[s] = gains[s + 1] / gap_ratio(s + 1)

    out = np.empty_like(data)
    for (z0, z1), g in zip(slabs, gains):
        out[z0:z1 + 1] = data[z0:z1 + 1] * g
    return ScalarVolume(cdwi.meta, out), tuple(gains), tuple(warnings)


def interscan_normalize(
    vol: ScalarVolume, canal_mask: ScalarVolume, target: float = CANAL_TARGET
) -> tuple[ScalarVolume, float]:
    """Scale the scan so the canal median equals ``target``; returns (volume, gain)."""
    mask = canal_mask.data > 0.5
    if not mask.any():
        raise ValidationError("canal mask is empty")
    median = float(np.median(vol.data[mask]))
    if median <= 0:
        raise ValidationError(f"canal median must be > 0, got {median}")
    gain = target / median
    return ScalarVolume(vol.meta, vol.data * gain), gain


def pick_reference_station(slabs, canal_mask: ScalarVolume) -> int:
    """Station containing the midpoint of the canal's z extent (lower index on ties)."""
    zs = np.nonzero(canal_mask.data.any(axis=(1, 2)))[0]
    if zs.size == 0:
        raise ValidationError("canal mask is empty")
    mid = int((zs[0] + zs[-1]) // 2)
    for idx, (z0, z1) in enumerate(slabs):
        if z0 <= mid <= z1:
            return idx
    raise ValidationError(f"canal midpoint z={mid} lies outside all station slabs")


def normalize_b900(
    fit: FitResult,
    bundle: StudyBundle,
    b_target: float = 900.0,
    target: float = CANAL_TARGET,
    boundary_slices: int = BOUNDARY_SLICES,
    noise_floor_frac: float = NOISE_FLOOR_FRAC,
) -> NormalizationResult:
    """Compute cDWI(b_target), equalize stations, then normalize to the canal target."""
    cdwi = compute_cdwi(fit, b_target)
    canal = bundle.canal_mask
    canal_nonempty = bool((canal.data > 0.5).any())
    reference = (
        pick_reference_station(bundle.station_slabs, canal) if canal_nonempty else 0
    )
    stage1, gains, warnings = interstation_equalize(
        cdwi, bundle.station_slabs, reference, boundary_slices, noise_floor_frac
    )
    if not canal_nonempty:
        raise NormalizationError(
            "canal mask is empty; inter-scan normalization impossible",
            stage1_volume=stage1,
            station_gains=gains,
        )
    mask = canal.data > 0.5
    median_before = float(np.median(stage1.data[mask]))
    try:
        normalized, scan_gain = interscan_normalize(stage1, canal, target)
    except ValidationError as exc:
        raise NormalizationError(str(exc), stage1_volume=stage1, station_gains=gains) from exc
    median_after = float(np.median(normalized.data[mask]))
    return NormalizationResult(
        normalized_b900=normalized,
        station_gains=gains,
        scan_gain=scan_gain,
        canal_median_before=median_before,
        canal_median_after=median_after,
        reference_station=reference,
        warnings=warnings,
    )
