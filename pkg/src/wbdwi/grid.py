"""Voxel-grid data model: grids, volumes, region codes, study bundles, resampling.

Axis convention (fixed for the whole package): axes are ordered (x, y, z)
with x = left-right, y = anterior-posterior, z = inferior-superior. Arrays
are stored C-contiguous indexed ``data[z, y, x]`` so x varies fastest, which
matches the on-disk layout of the NIfTI subset used by :mod:`wbdwi.nifti`.
Stations stack along z. The physical center of voxel (i, j, k) is
``origin + (i, j, k) * spacing`` (all in mm). Every type here is immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ValidationError

Triple = tuple[float, float, float]


@dataclass(frozen=True)
class GridMeta:
    """Geometry of a voxel grid: dims (voxels per axis), spacing and origin in mm."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if len(self.dims) != 3 or len(self.spacing) != 3 or len(self.origin) != 3:
            raise ValidationError("GridMeta requires 3 dims, 3 spacings, 3 origins")
        if any(d < 1 for d in self.dims):
            raise ValidationError(f"all dims must be >= 1, got {self.dims}")
        if any(not np.isfinite(s) or s <= 0 for s in self.spacing):
            raise ValidationError(f"all spacings must be > 0, got {self.spacing}")
        if any(not np.isfinite(o) for o in self.origin):
            raise ValidationError(f"origin must be finite, got {self.origin}")

    @property
    def shape_zyx(self) -> tuple[int, int, int]:
        nx, ny, nz = self.dims
        return (nz, ny, nx)

    @property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz


def voxel_volume_ml(meta: GridMeta) -> float:
    """Volume of one voxel in millilitres (mm^3 / 1000)."""
    return meta.voxel_volume_mm3 / 1000.0


def _freeze(arr: np.ndarray) -> np.ndarray:
    """Return an immutable C-contiguous array without mutating the caller's."""
    if arr.flags.c_contiguous and not arr.flags.writeable:
        return arr
    arr = np.ascontiguousarray(arr)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScalarVolume:
    """A dense real-valued volume on a grid. Data shape is (nz, ny, nx)."""

    meta: GridMeta
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.meta.shape_zyx:
            raise ValidationError(
                f"data shape {data.shape} does not match grid (z,y,x) {self.meta.shape_zyx}"
            )
        if not np.all(np.isfinite(data)):
            raise ValidationError("volume contains non-finite values")
        object.__setattr__(self, "data", _freeze(data))

    def with_data(self, data: np.ndarray) -> "ScalarVolume":
        return ScalarVolume(self.meta, data)


@dataclass(frozen=True)
class LabelVolume:
    """A dense non-negative integer label volume (0 = background)."""

    meta: GridMeta
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            if not np.allclose(data, np.rint(data)):
                raise ValidationError("label volume requires integer values")
            data = np.rint(data).astype(np.int32)
        data = data.astype(np.int32, copy=False)
        if data.shape != self.meta.shape_zyx:
            raise ValidationError(
                f"label shape {data.shape} does not match grid (z,y,x) {self.meta.shape_zyx}"
            )
        if data.min(initial=0) < 0:
            raise ValidationError("label volume contains negative labels")
        object.__setattr__(self, "data", _freeze(data))


class RegionCode(IntEnum):
    """Skeletal region attribution codes. WHOLE_SKELETON is the aggregate."""

    WHOLE_SKELETON = 0
    LIMBS = 1
    PELVIS = 2
    THORAX = 3
    LUMBAR_SPINE = 4
    THORACIC_SPINE = 5
    CERVICAL_SPINE = 6


#: Non-aggregate codes in tie-break order (lower code wins ties).
REGIONS = (
    RegionCode.LIMBS,
    RegionCode.PELVIS,
    RegionCode.THORAX,
    RegionCode.LUMBAR_SPINE,
    RegionCode.THORACIC_SPINE,
    RegionCode.CERVICAL_SPINE,
)

TIMEPOINT_TAGS = ("pre", "post", "baseline1", "baseline2")


@dataclass(frozen=True)
class StudyBundle:
    """One timepoint's assembled whole-body volumes plus auxiliary masks.

    All volumes share one grid; ``station_slabs`` are inclusive (z_start, z_end)
    voxel index ranges that are disjoint, ordered, and cover the z extent.
    """

    b_values: tuple[float, ...]
    b_volumes: tuple[ScalarVolume, ...]
    station_slabs: tuple[tuple[int, int], ...]
    skeleton_prob: ScalarVolume
    canal_mask: ScalarVolume
    organ_mask: ScalarVolume
    region_labels: LabelVolume
    timepoint_tag: str = "pre"

    def __post_init__(self):
        object.__setattr__(self, "b_values", tuple(float(b) for b in self.b_values))
        object.__setattr__(self, "b_volumes", tuple(self.b_volumes))
        object.__setattr__(
            self, "station_slabs", tuple((int(a), int(b)) for a, b in self.station_slabs)
        )
        if len(self.b_values) < 2:
            raise ValidationError("insufficient b-values: at least two b-value series required")
        if any(b2 <= b1 for b1, b2 in zip(self.b_values, self.b_values[1:])):
            raise ValidationError(f"b-values must be strictly ascending, got {self.b_values}")
        if len(self.b_volumes) != len(self.b_values):
            raise ValidationError("one volume per b-value required")
        meta = self.b_volumes[0].meta
        for vol in self.b_volumes[1:]:
            if vol.meta != meta:
                raise ValidationError("all b-value volumes must share one grid")
        for name, vol in (
            ("skeleton_prob", self.skeleton_prob),
            ("canal_mask", self.canal_mask),
            ("organ_mask", self.organ_mask),
            ("region_labels", self.region_labels),
        ):
            if vol.meta != meta:
                raise ValidationError(f"{name} is not on the b-value grid")
        sk = self.skeleton_prob.data
        if sk.min() < 0.0 or sk.max() > 1.0:
            raise ValidationError("skeleton_prob values must lie in [0, 1]")
        for m in (self.canal_mask, self.organ_mask):
            vals = np.unique(m.data)
            if not np.all(np.isin(vals, (0.0, 1.0))):
                raise ValidationError("canal/organ masks must be binary (0/1)")
        _check_slabs(self.station_slabs, meta.dims[2])
        if self.timepoint_tag not in TIMEPOINT_TAGS:
            raise ValidationError(f"timepoint_tag must be one of {TIMEPOINT_TAGS}")

    @property
    def meta(self) -> GridMeta:
        return self.b_volumes[0].meta

    @property
    def n_stations(self) -> int:
        return len(self.station_slabs)


def _check_slabs(slabs: tuple[tuple[int, int], ...], nz: int) -> None:
    if not slabs:
        raise ValidationError("at least one station slab required")
    expect = 0
    for z0, z1 in slabs:
        if z0 > z1:
            raise ValidationError(f"slab ({z0},{z1}) is inverted")
        if z0 < expect:
            raise ValidationError(f"slab ({z0},{z1}) overlaps or reorders a previous slab")
        if z0 > expect:
            raise ValidationError(f"gap in station slabs before z={z0}")
        expect = z1 + 1
    if expect != nz:
        raise ValidationError(f"station slabs cover z up to {expect - 1}, grid has nz={nz}")


def _axis_fractional_index(src_n, src_s, src_o, tgt_n, tgt_s, tgt_o):
    """Fractional source index of each target voxel center along one axis."""
    centers = tgt_o + np.arange(tgt_n, dtype=np.float64) * tgt_s
    return (centers - src_o) / src_s


def resample_to_grid(src: ScalarVolume, target: GridMeta, mode: str = "trilinear") -> ScalarVolume:
    """Resample onto ``target``. Samples outside the source voxel-center extent are 0.

    Grids are axis-aligned in one shared physical frame, so interpolation is
    separable per axis. ``trilinear`` for intensities, ``nearest`` for masks.
    """
    if mode not in ("trilinear", "nearest"):
        raise ValidationError(f"unknown resampling mode {mode!r}")
    if src.meta == target:
        return ScalarVolume(target, src.data.copy())
    out = _resample_array(src.data, src.meta, target, mode)
    return ScalarVolume(target, out)


def resample_labels(src: LabelVolume, target: GridMeta) -> LabelVolume:
    """Nearest-neighbour resampling of a label volume (no new labels introduced)."""
    if src.meta == target:
        return LabelVolume(target, src.data.copy())
    out = _resample_array(src.data.astype(np.float64), src.meta, target, "nearest")
    return LabelVolume(target, np.rint(out).astype(np.int32))


def _resample_array(data: np.ndarray, src: GridMeta, target: GridMeta, mode: str) -> np.ndarray:
    frac = [
        _axis_fractional_index(src.dims[a], src.spacing[a], src.origin[a],
                               target.dims[a], target.spacing[a], target.origin[a])
        for a in range(3)
    ]
    fx, fy, fz = frac
    nx, ny, nz = src.dims
    out_x = (fx < 0) | (fx > nx - 1)
    out_y = (fy < 0) | (fy > ny - 1)
    out_z = (fz < 0) | (fz > nz - 1)

    if mode == "nearest":
        ix = np.clip(np.rint(fx).astype(np.int64), 0, nx - 1)
        iy = np.clip(np.rint(fy).astype(np.int64), 0, ny - 1)
        iz = np.clip(np.rint(fz).astype(np.int64), 0, nz - 1)
        out = data[np.ix_(iz, iy, ix)].astype(np.float64)
    else:
        x0 = np.clip(np.floor(fx).astype(np.int64), 0, nx - 1)
        y0 = np.clip(np.floor(fy).astype(np.int64), 0, ny - 1)
        z0 = np.clip(np.floor(fz).astype(np.int64), 0, nz - 1)
        x1 = np.minimum(x0 + 1, nx - 1)
        y1 = np.minimum(y0 + 1, ny - 1)
        z1 = np.minimum(z0 + 1, nz - 1)
        wx = np.clip(fx - x0, 0.0, 1.0)
        wy = np.clip(fy - y0, 0.0, 1.0)
        wz = np.clip(fz - z0, 0.0, 1.0)
        a = data[z0] * (1.0 - wz)[:, None, None] + data[z1] * wz[:, None, None]
        b = a[:, y0, :] * (1.0 - wy)[None, :, None] + a[:, y1, :] * wy[None, :, None]
        out = b[:, :, x0] * (1.0 - wx) + b[:, :, x1] * wx

    outside = out_z[:, None, None] | out_y[None, :, None] | out_x[None, None, :]
    out[outside] = 0.0
    return out
