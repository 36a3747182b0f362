"""Minimal NIfTI-1 single-file (.nii) reader and writer.

Supported subset: little-endian, 3 spatial dims, datatypes 4 (int16) and
16 (float32), header 348 bytes followed by the 4-byte extension pad
(vox_offset 352). Geometry is reduced to pixdim spacing plus the qoffset
origin; rotations are out of scope.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import GridMeta, LabelVolume, ScalarVolume

HEADER_SIZE = 348
VOX_OFFSET = 352
DT_INT16 = 4
DT_FLOAT32 = 16
MAGIC = b"n+1\x00"

# (offset, struct format) for the fields this subset actually uses.
_FIELDS = {
    "sizeof_hdr": (0, "<i"),
    "dim": (40, "<8h"),
    "datatype": (70, "<h"),
    "bitpix": (72, "<h"),
    "pixdim": (76, "<8f"),
    "vox_offset": (108, "<f"),
    "scl_slope": (112, "<f"),
    "scl_inter": (116, "<f"),
    "descrip": (148, "<80s"),
    "qform_code": (252, "<h"),
    "qoffset_x": (268, "<f"),
    "qoffset_y": (272, "<f"),
    "qoffset_z": (276, "<f"),
    "magic": (344, "<4s"),
}


def _unpack(header: bytes, name: str):
    off, fmt = _FIELDS[name]
    vals = struct.unpack_from(fmt, header, off)
    return vals if len(vals) > 1 else vals[0]


def _read_header(raw: bytes, path) -> dict:
    if len(raw) < HEADER_SIZE:
        raise ValidationError(
            f"{path}: truncated header, need {HEADER_SIZE} bytes, got {len(raw)}"
        )
    header = raw[:HEADER_SIZE]
    if _unpack(header, "magic") != MAGIC:
        raise ValidationError(f"{path}: not a single-file NIfTI-1 (bad magic bytes)")
    if _unpack(header, "sizeof_hdr") != HEADER_SIZE:
        raise ValidationError(f"{path}: unsupported byte order or corrupt header")
    dim = _unpack(header, "dim")
    if dim[0] != 3:
        raise ValidationError(f"{path}: expected 3 spatial dims, header says dim[0]={dim[0]}")
    datatype = _unpack(header, "datatype")
    if datatype not in (DT_INT16, DT_FLOAT32):
        raise ValidationError(
            f"{path}: unsupported datatype {datatype} (only int16=4 and float32=16)"
        )
    pixdim = _unpack(header, "pixdim")
    if any(p <= 0 for p in pixdim[1:4]):
        raise ValidationError(f"{path}: degenerate spacing {pixdim[1:4]}")
    # pixdim/qoffset are float32 on disk; canonicalize so grid equality survives
    # a write/read round trip (1.6 stays 1.6, not 1.600000023841858)
    canon = lambda v: float(f"{float(v):.6g}")  # noqa: E731
    return {
        "dims": (int(dim[1]), int(dim[2]), int(dim[3])),
        "spacing": tuple(canon(p) for p in pixdim[1:4]),
        "origin": (
            canon(_unpack(header, "qoffset_x")),
            canon(_unpack(header, "qoffset_y")),
            canon(_unpack(header, "qoffset_z")),
        ),
        "datatype": datatype,
        "vox_offset": int(round(_unpack(header, "vox_offset"))),
        "scl_slope": float(_unpack(header, "scl_slope")),
        "scl_inter": float(_unpack(header, "scl_inter")),
    }


def _read_array(path) -> tuple[GridMeta, np.ndarray]:
    raw = Path(path).read_bytes()
    hdr = _read_header(raw, path)
    nx, ny, nz = hdr["dims"]
    itemsize = 2 if hdr["datatype"] == DT_INT16 else 4
    nbytes = nx * ny * nz * itemsize
    payload = raw[hdr["vox_offset"]:hdr["vox_offset"] + nbytes]
    if len(payload) < nbytes:
        raise ValidationError(
            f"{path}: truncated data, expected {nbytes} bytes, got {len(payload)} "
            f"(short by {nbytes - len(payload)})"
        )
    dtype = "<i2" if hdr["datatype"] == DT_INT16 else "<f4"
    data = np.frombuffer(payload, dtype=dtype).reshape(nz, ny, nx).astype(np.float64)
    slope, inter = hdr["scl_slope"], hdr["scl_inter"]
    if slope != 0.0 and (slope, inter) != (1.0, 0.0):
        data = data * slope + inter
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{path}: volume contains non-finite values after scaling")
    meta = GridMeta(hdr["dims"], hdr["spacing"], hdr["origin"])
    return meta, data


def read_nifti(path) -> ScalarVolume:
    meta, data = _read_array(path)
    return ScalarVolume(meta, data)


def read_nifti_labels(path) -> LabelVolume:
    meta, data = _read_array(path)
    return LabelVolume(meta, np.rint(data).astype(np.int32))


def _pack_header(meta: GridMeta, datatype: int) -> bytes:
    header = bytearray(HEADER_SIZE)
    struct.pack_into("<i", header, 0, HEADER_SIZE)
    nx, ny, nz = meta.dims
    struct.pack_into("<8h", header, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    bitpix = 16 if datatype == DT_INT16 else 32
    struct.pack_into("<h", header, 70, datatype)
    struct.pack_into("<h", header, 72, bitpix)
    sx, sy, sz = meta.spacing
    struct.pack_into("<8f", header, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", header, 108, float(VOX_OFFSET))
    struct.pack_into("<f", header, 112, 1.0)  # scl_slope
    struct.pack_into("<f", header, 116, 0.0)  # scl_inter
    struct.pack_into("<80s", header, 148, b"wbdwi")
    struct.pack_into("<h", header, 252, 1)  # qform_code: scanner anat
    struct.pack_into("<3f", header, 268, *[float(o) for o in meta.origin])
    struct.pack_into("<4s", header, 344, MAGIC)
    return bytes(header)


def write_nifti(vol: ScalarVolume, path) -> None:
    """Write as little-endian float32 (values are quantized to float32)."""
    data = np.asarray(vol.data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{path}: refusing to write non-finite voxel values")
    payload = data.astype("<f4").tobytes()
    _write_file(path, _pack_header(vol.meta, DT_FLOAT32), payload)


def write_nifti_labels(vol: LabelVolume, path) -> None:
    """Write a label volume as int16 (labels must fit in int16)."""
    data = vol.data
    if data.max(initial=0) > np.iinfo(np.int16).max:
        raise ValidationError(f"{path}: labels exceed the int16 range")
    payload = data.astype("<i2").tobytes()
    _write_file(path, _pack_header(vol.meta, DT_INT16), payload)


def _write_file(path, header: bytes, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(b"\x00\x00\x00\x00")  # no extensions
        fh.write(payload)
