"""Lesion probability backends: shallow CNN inference and the threshold baseline.

The CNN is conv(2->16)+BN+ReLU, conv(16->32)+BN+ReLU, conv(32->64)+BN+ReLU,
conv(64->1)+sigmoid with 3x3x3 kernels and same-padding, run float32 in
sliding 64^3 windows over inputs resampled to 1.6x1.6 mm in-plane (slice
spacing untouched). Dropout is a train-time concern and does not exist here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import StageError, ValidationError
from .grid import GridMeta, ScalarVolume, resample_to_grid
from .wbw1 import ActivationLayer, BatchNormLayer, ConvLayer, SegModelWeights

logger = logging.getLogger("wbdwi")

#: Smallest probability step away from {0, 1} the sigmoid output may take.
_SIGMOID_EPS = np.float32(2.0 ** -24)


@dataclass(frozen=True)
class SegConfig:
    backend: str = "threshold"  # "threshold" or "cnn"
    patch_size: int = 64
    patch_overlap: float = 0.5
    binarize_threshold: float = 0.5
    skeleton_prob_min: float = 0.5
    intensity_min: float = 2000.0  # normalized units
    inference_inplane_mm: float = 1.6

    def __post_init__(self):
        if self.backend not in ("threshold", "cnn"):
            raise ValidationError(f"unknown segmentation backend {self.backend!r}")
        if not 0.0 < self.patch_overlap < 1.0:
            raise ValidationError("patch_overlap must lie in (0, 1)")
        if self.patch_size < 8:
            raise ValidationError("patch_size must be >= 8")
        if not 0.0 < self.binarize_threshold < 1.0:
            raise ValidationError("binarize_threshold must lie in (0, 1)")


def _conv3d_same(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-padded 3x3x3 convolution; x is (in_ch, Z, Y, X) float32."""
    _, z, y, w = x.shape
    out_ch = weight.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (1, 1)))
    out = np.broadcast_to(bias[:, None, None, None], (out_ch, z, y, w)).astype(np.float32).copy()
    for dz in range(3):
        for dy in range(3):
            for dx in range(3):
                taps = weight[:, :, dz, dy, dx]  # (out_ch, in_ch)
                window = xp[:, dz:dz + z, dy:dy + y, dx:dx + w]
                out += np.tensordot(taps, window, axes=([1], [0]))
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return np.clip(out, _SIGMOID_EPS, np.float32(1.0) - _SIGMOID_EPS)


def cnn_forward(weights: SegModelWeights, patch: np.ndarray) -> np.ndarray:
    """Forward pass on a (2, Z, Y, X) patch; returns (Z, Y, X) probabilities."""
    x = np.asarray(patch, dtype=np.float32)
    if x.ndim != 4 or x.shape[0] != 2:
        raise ValidationError(f"patch must be (2, Z, Y, X), got {x.shape}")
    for idx, layer in enumerate(weights.layers):
        if isinstance(layer, ConvLayer):
            x = _conv3d_same(x, layer.weight, layer.bias)
        elif isinstance(layer, BatchNormLayer):
            scale = layer.gamma / np.sqrt(layer.running_var + np.float32(layer.eps))
            shift = layer.beta - layer.running_mean * scale
            x = x * scale[:, None, None, None] + shift[:, None, None, None]
        elif isinstance(layer, ActivationLayer):
            x = np.maximum(x, np.float32(0.0)) if layer.fn == "relu" else _sigmoid(x)
        if not np.all(np.isfinite(x)):
            raise StageError("segment", f"non-finite activation after layer {idx} ({layer.name})")
    return x[0]


def _tile_starts(extent: int, patch: int, step: int) -> list[int]:
    if extent <= patch:
        return [0]
    starts = list(range(0, extent - patch + 1, step))
    if starts[-1] != extent - patch:
        starts.append(extent - patch)
    return starts


#: Receptive-field radius of the 4-layer chain (one voxel per convolution).
_RF_RADIUS = 4


def _tile_forward(channels: np.ndarray, weights: SegModelWeights, config: SegConfig) -> np.ndarray:
    """Sliding-window inference with uniform averaging of overlapping patches.

    Each patch contributes only the region unaffected by its own border
    padding (except where the patch border is the volume border), so tiling
    is translation invariant away from the volume edges.
    """
    p = config.patch_size
    step = max(1, int(round(p * (1.0 - config.patch_overlap))))
    margin = min(_RF_RADIUS, max(0, (p - step) // 2))
    _, z, y, x = channels.shape
    pz, py, px = (max(p, z), max(p, y), max(p, x))
    padded = np.zeros((2, pz, py, px), np.float32)
    padded[:, :z, :y, :x] = channels
    acc = np.zeros((pz, py, px), np.float32)
    cnt = np.zeros((pz, py, px), np.int32)

    def valid(start: int, extent: int) -> tuple[int, int]:
        lo = 0 if start == 0 else margin
        hi = p if start + p == extent else p - margin
        return lo, hi

    for z0 in _tile_starts(pz, p, step):
        vz0, vz1 = valid(z0, pz)
        for y0 in _tile_starts(py, p, step):
            vy0, vy1 = valid(y0, py)
            for x0 in _tile_starts(px, p, step):
                vx0, vx1 = valid(x0, px)
                out = cnn_forward(weights, padded[:, z0:z0 + p, y0:y0 + p, x0:x0 + p])
                acc[z0 + vz0:z0 + vz1, y0 + vy0:y0 + vy1, x0 + vx0:x0 + vx1] += out[
                    vz0:vz1, vy0:vy1, vx0:vx1
                ]
                cnt[z0 + vz0:z0 + vz1, y0 + vy0:y0 + vy1, x0 + vx0:x0 + vx1] += 1
    return (acc / cnt)[:z, :y, :x]


def _inference_grid(native: GridMeta, inplane_mm: float) -> GridMeta:
    def axis(n, s):
        if abs(s - inplane_mm) < 1e-9:
            return n, s
        # cover the full native extent so the return trip never samples outside
        return int(np.ceil((n - 1) * s / inplane_mm - 1e-9)) + 1, inplane_mm

    nx, sx = axis(native.dims[0], native.spacing[0])
    ny, sy = axis(native.dims[1], native.spacing[1])
    return GridMeta((nx, ny, native.dims[2]), (sx, sy, native.spacing[2]), native.origin)


def segment_cnn(
    skeleton_prob: ScalarVolume,
    norm_b900: ScalarVolume,
    weights: SegModelWeights,
    config: SegConfig,
) -> ScalarVolume:
    """CNN probability map on the native grid (inference runs at 1.6 mm in-plane)."""
    if skeleton_prob.meta != norm_b900.meta:
        raise ValidationError("skeleton map and normalized b900 must share one grid")
    native = skeleton_prob.meta
    if not (skeleton_prob.data > 0).any():
        logger.warning("skeleton probability map is all zero; returning empty probability")
        return ScalarVolume(native, np.zeros(native.shape_zyx))
    grid = _inference_grid(native, config.inference_inplane_mm)
    sk = resample_to_grid(skeleton_prob, grid, "trilinear")
    b9 = resample_to_grid(norm_b900, grid, "trilinear")
    channels = np.stack([sk.data, b9.data]).astype(np.float32)
    prob = _tile_forward(channels, weights, config).astype(np.float64)
    vol = ScalarVolume(grid, prob)
    if grid != native:
        vol = resample_to_grid(vol, native, "trilinear")
        vol = ScalarVolume(native, np.clip(vol.data, 0.0, 1.0))
    return vol


def segment_threshold(
    skeleton_prob: ScalarVolume, norm_b900: ScalarVolume, config: SegConfig
) -> ScalarVolume:
    """Deterministic baseline: 1 where skeleton and intensity thresholds both hold."""
    if skeleton_prob.meta != norm_b900.meta:
        raise ValidationError("skeleton map and normalized b900 must share one grid")
    hit = (skeleton_prob.data >= config.skeleton_prob_min) & (
        norm_b900.data >= config.intensity_min
    )
    return ScalarVolume(skeleton_prob.meta, hit.astype(np.float64))


def binarize(prob: ScalarVolume, threshold: float) -> ScalarVolume:
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"binarize threshold must lie in (0, 1), got {threshold}")
    return ScalarVolume(prob.meta, (prob.data >= threshold).astype(np.float64))
