"""Portable weight container (WBW1) for the lesion-segmentation network.

File layout: magic ``WBW1``; little-endian u32 header length; UTF-8 JSON
header ``{"format_version":1, "layers":[{"name","kind","shape","offset",
"nbytes"},...]}``; payload of concatenated little-endian float32 tensors at
the stated offsets. Convolution kernels are stored (out_ch, in_ch, kz, ky, kx).
Activation entries carry an extra ``fn`` key and no payload bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

MAGIC = b"WBW1"
FORMAT_VERSION = 1
#: Channel progression of the segmentation network.
CHANNELS = (2, 16, 32, 64, 1)
KERNEL = (3, 3, 3)


@dataclass(frozen=True)
class ConvLayer:
    name: str
    weight: np.ndarray  # (out_ch, in_ch, kz, ky, kx) float32
    bias: np.ndarray  # (out_ch,) float32


@dataclass(frozen=True)
class BatchNormLayer:
    name: str
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float


@dataclass(frozen=True)
class ActivationLayer:
    name: str
    fn: str  # "relu" or "sigmoid"


Layer = ConvLayer | BatchNormLayer | ActivationLayer


@dataclass(frozen=True)
class SegModelWeights:
    """Validated layer chain: conv+bn+relu x3 followed by conv+sigmoid."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        _validate_chain(self.layers)

    @classmethod
    def zeros(cls) -> "SegModelWeights":
        """All-zero parameters (unit batch-norm variance); forward outputs 0.5."""
        layers: list[Layer] = []
        for i in range(len(CHANNELS) - 1):
            cin, cout = CHANNELS[i], CHANNELS[i + 1]
            layers.append(ConvLayer(
                name=f"conv{i + 1}",
                weight=np.zeros((cout, cin, *KERNEL), np.float32),
                bias=np.zeros(cout, np.float32),
            ))
            if i < len(CHANNELS) - 2:
                layers.append(BatchNormLayer(
                    name=f"bn{i + 1}",
                    gamma=np.ones(cout, np.float32),
                    beta=np.zeros(cout, np.float32),
                    running_mean=np.zeros(cout, np.float32),
                    running_var=np.ones(cout, np.float32),
                    eps=1e-3,
                ))
                layers.append(ActivationLayer(name=f"act{i + 1}", fn="relu"))
            else:
                layers.append(ActivationLayer(name=f"act{i + 1}", fn="sigmoid"))
        return cls(tuple(layers))


def _validate_chain(layers) -> None:
    expected_in = CHANNELS[0]
    conv_idx = 0
    stage = "conv"
    for layer in layers:
        if stage == "conv":
            if not isinstance(layer, ConvLayer):
                raise ValidationError(f"layer {layer.name!r}: expected a convolution here")
            cout = CHANNELS[conv_idx + 1]
            want = (cout, expected_in, *KERNEL)
            if layer.weight.shape != want:
                raise ValidationError(
                    f"layer {layer.name!r}: kernel shape {layer.weight.shape} != {want}"
                )
            if layer.bias.shape != (cout,):
                raise ValidationError(f"layer {layer.name!r}: bias shape {layer.bias.shape}")
            _check_finite(layer.name, layer.weight, layer.bias)
            expected_in = cout
            conv_idx += 1
            stage = "bn" if conv_idx < len(CHANNELS) - 1 else "final_act"
        elif stage == "bn":
            if not isinstance(layer, BatchNormLayer):
                raise ValidationError(f"layer {layer.name!r}: expected batch-norm here")
            for arr in (layer.gamma, layer.beta, layer.running_mean, layer.running_var):
                if arr.shape != (expected_in,):
                    raise ValidationError(
                        f"layer {layer.name!r}: parameter shape {arr.shape} != ({expected_in},)"
                    )
            _check_finite(layer.name, layer.gamma, layer.beta,
                          layer.running_mean, layer.running_var)
            if float(np.min(layer.running_var)) < 0:
                raise ValidationError(f"layer {layer.name!r}: negative running variance")
            if not np.isfinite(layer.eps) or layer.eps < 0:
                raise ValidationError(f"layer {layer.name!r}: bad epsilon {layer.eps}")
            stage = "act"
        elif stage == "act":
            if not isinstance(layer, ActivationLayer) or layer.fn != "relu":
                raise ValidationError(f"layer {layer.name!r}: expected a relu activation here")
            stage = "conv"
        elif stage == "final_act":
            if not isinstance(layer, ActivationLayer) or layer.fn != "sigmoid":
                raise ValidationError(f"layer {layer.name!r}: expected the sigmoid output here")
            stage = "done"
        else:
            raise ValidationError(f"unexpected extra layer {layer.name!r}")
    if stage != "done":
        raise ValidationError("layer chain ended early")


def _check_finite(name: str, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"layer {name!r}: non-finite parameter")


def _tensor_entries(layer: Layer):
    if isinstance(layer, ConvLayer):
        yield f"{layer.name}.weight", "conv3d", layer.weight
        yield f"{layer.name}.bias", "conv3d", layer.bias
    elif isinstance(layer, BatchNormLayer):
        yield f"{layer.name}.gamma", "batchnorm", layer.gamma
        yield f"{layer.name}.beta", "batchnorm", layer.beta
        yield f"{layer.name}.running_mean", "batchnorm", layer.running_mean
        yield f"{layer.name}.running_var", "batchnorm", layer.running_var
        yield f"{layer.name}.eps", "batchnorm", np.asarray([layer.eps], np.float32)


def save_weights(weights: SegModelWeights, path) -> None:
    entries = []
    chunks = []
    offset = 0
    for layer in weights.layers:
        if isinstance(layer, ActivationLayer):
            entries.append({
                "name": layer.name, "kind": "activation", "shape": [],
                "offset": offset, "nbytes": 0, "fn": layer.fn,
            })
            continue
        for name, kind, arr in _tensor_entries(layer):
            blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            entries.append({
                "name": name, "kind": kind, "shape": list(arr.shape),
                "offset": offset, "nbytes": len(blob),
            })
            chunks.append(blob)
            offset += len(blob)
    header = json.dumps({"format_version": FORMAT_VERSION, "layers": entries}).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in chunks:
            fh.write(blob)


def load_weights(path) -> SegModelWeights:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValidationError(f"{path}: bad magic bytes (not a WBW1 file)")
    if len(raw) < 8:
        raise ValidationError(f"{path}: truncated header")
    (hlen,) = struct.unpack_from("<I", raw, 4)
    header_end = 8 + hlen
    if len(raw) < header_end:
        raise ValidationError(f"{path}: truncated header (need {hlen} bytes)")
    try:
        doc = json.loads(raw[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: invalid header JSON ({exc})") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported format_version {doc.get('format_version')}")
    payload = raw[header_end:]

    def tensor(entry) -> np.ndarray:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape, dtype=np.int64)) if shape else 0
        if entry["nbytes"] != n * 4:
            raise ValidationError(
                f"{path}: entry {entry['name']!r} declares {entry['nbytes']} bytes for shape {shape}"
            )
        chunk = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
        if len(chunk) < entry["nbytes"]:
            raise ValidationError(f"{path}: payload truncated at entry {entry['name']!r}")
        return np.frombuffer(chunk, dtype="<f4").reshape(shape).astype(np.float32)

    groups: dict[str, dict] = {}
    order: list[tuple[str, str, str | None]] = []  # (base name, kind, fn)
    for entry in doc.get("layers", []):
        kind = entry.get("kind")
        if kind == "activation":
            order.append((entry["name"], kind, entry.get("fn")))
            continue
        base, _, part = entry["name"].rpartition(".")
        if not base:
            raise ValidationError(f"{path}: tensor entry {entry['name']!r} lacks a layer prefix")
        if base not in groups:
            groups[base] = {}
            order.append((base, kind, None))
        groups[base][part] = tensor(entry)

    layers: list[Layer] = []
    for base, kind, fn in order:
        if kind == "activation":
            if fn not in ("relu", "sigmoid"):
                raise ValidationError(f"{path}: activation {base!r} has unknown fn {fn!r}")
            layers.append(ActivationLayer(base, fn))
        elif kind == "conv3d":
            parts = groups[base]
            if set(parts) != {"weight", "bias"}:
                raise ValidationError(f"{path}: conv layer {base!r} has parts {sorted(parts)}")
            layers.append(ConvLayer(base, parts["weight"], parts["bias"]))
        elif kind == "batchnorm":
            parts = groups[base]
            want = {"gamma", "beta", "running_mean", "running_var", "eps"}
            if set(parts) != want:
                raise ValidationError(f"{path}: batch-norm layer {base!r} has parts {sorted(parts)}")
            layers.append(BatchNormLayer(
                base, parts["gamma"], parts["beta"],
                parts["running_mean"], parts["running_var"], float(parts["eps"][0]),
            ))
        else:
            raise ValidationError(f"{path}: unknown layer kind {kind!r}")
    return SegModelWeights(tuple(layers))
