import struct

import numpy as np
import pytest

from wbdwi.errors import ValidationError
from wbdwi.grid import GridMeta, LabelVolume, ScalarVolume
from wbdwi.nifti import (
    read_nifti,
    read_nifti_labels,
    write_nifti,
    write_nifti_labels,
)


def test_round_trip_identity(tmp_path):
    meta = GridMeta((5, 4, 3), (1.6, 1.6, 5.0), (10.0, -4.0, 2.5))
    rng = np.random.default_rng(1)
    vol = ScalarVolume(meta, rng.normal(size=meta.shape_zyx).astype(np.float32))
    path = tmp_path / "vol.nii"
    write_nifti(vol, path)
    back = read_nifti(path)
    assert back.meta.dims == meta.dims
    assert np.allclose(back.meta.spacing, meta.spacing, atol=1e-6)
    assert np.allclose(back.meta.origin, meta.origin, atol=1e-5)
    np.testing.assert_array_equal(back.data, vol.data)


def test_file_size_is_header_plus_payload(tmp_path):
    vol = ScalarVolume(GridMeta((2, 2, 2), (1, 1, 1)), np.zeros((2, 2, 2)))
    path = tmp_path / "tiny.nii"
    write_nifti(vol, path)
    # 348-byte header + 4-byte extension pad + 8 float32 voxels
    assert path.stat().st_size == 352 + 32


def test_scl_slope_inter_applied(tmp_path):
    vol = ScalarVolume(GridMeta((1, 1, 1), (1, 1, 1)), np.array([[[3.0]]]))
    path = tmp_path / "scaled.nii"
    write_nifti(vol, path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<f", raw, 112, 2.0)  # scl_slope
    struct.pack_into("<f", raw, 116, 1.0)  # scl_inter
    path.write_bytes(bytes(raw))
    assert read_nifti(path).data[0, 0, 0] == pytest.approx(7.0)


def test_truncated_file_names_shortfall(tmp_path):
    vol = ScalarVolume(GridMeta((4, 4, 4), (1, 1, 1)), np.ones((4, 4, 4)))
    path = tmp_path / "trunc.nii"
    write_nifti(vol, path)
    data = path.read_bytes()
    path.write_bytes(data[:352 + 100])
    with pytest.raises(ValidationError, match="short by 156"):
        read_nifti(path)
    path.write_bytes(data[:100])
    with pytest.raises(ValidationError, match="truncated header"):
        read_nifti(path)


def test_bad_magic_rejected(tmp_path):
    vol = ScalarVolume(GridMeta((2, 2, 2), (1, 1, 1)), np.zeros((2, 2, 2)))
    path = tmp_path / "bad.nii"
    write_nifti(vol, path)
    raw = bytearray(path.read_bytes())
    raw[344:348] = b"ni1\x00"  # two-file magic: unsupported
    path.write_bytes(bytes(raw))
    with pytest.raises(ValidationError, match="magic"):
        read_nifti(path)


def test_wrong_dim_count_rejected(tmp_path):
    vol = ScalarVolume(GridMeta((2, 2, 2), (1, 1, 1)), np.zeros((2, 2, 2)))
    path = tmp_path / "dim4.nii"
    write_nifti(vol, path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<h", raw, 40, 4)  # dim[0] = 4
    path.write_bytes(bytes(raw))
    with pytest.raises(ValidationError, match="3 spatial dims"):
        read_nifti(path)


def test_unsupported_datatype_rejected(tmp_path):
    vol = ScalarVolume(GridMeta((2, 2, 2), (1, 1, 1)), np.zeros((2, 2, 2)))
    path = tmp_path / "dt.nii"
    write_nifti(vol, path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<h", raw, 70, 64)  # float64: out of subset
    path.write_bytes(bytes(raw))
    with pytest.raises(ValidationError, match="datatype"):
        read_nifti(path)


def test_nan_refused_on_write(tmp_path):
    meta = GridMeta((2, 2, 2), (1, 1, 1))
    good = ScalarVolume(meta, np.zeros((2, 2, 2)))
    data = np.array(good.data, copy=True)
    data[0, 0, 0] = np.nan
    bad = good.__class__.__new__(good.__class__)  # bypass constructor NaN check
    object.__setattr__(bad, "meta", meta)
    object.__setattr__(bad, "data", data)
    with pytest.raises(ValidationError, match="non-finite"):
        write_nifti(bad, tmp_path / "nan.nii")


def test_label_round_trip_int16(tmp_path):
    meta = GridMeta((3, 3, 3), (2, 2, 2))
    rng = np.random.default_rng(2)
    lab = LabelVolume(meta, rng.integers(0, 7, size=(3, 3, 3)))
    path = tmp_path / "labels.nii"
    write_nifti_labels(lab, path)
    back = read_nifti_labels(path)
    np.testing.assert_array_equal(back.data, lab.data)
    assert path.stat().st_size == 352 + 27 * 2
