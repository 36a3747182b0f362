import json

import numpy as np
import pytest

from wbdwi.errors import ValidationError
from wbdwi.grid import GridMeta, LabelVolume, ScalarVolume
from wbdwi.ingest import assemble_stations, load_manifest, load_study, write_sidecar
from wbdwi.nifti import write_nifti, write_nifti_labels
from wbdwi.phantom import PhantomSpec, generate_phantom, write_study


def _write_masks(d, meta):
    ones = ScalarVolume(meta, np.ones(meta.shape_zyx))
    write_nifti(ones, d / "skel.nii")
    write_nifti(ones, d / "canal.nii")
    write_nifti(ScalarVolume(meta, np.zeros(meta.shape_zyx)), d / "organs.nii")
    write_nifti_labels(LabelVolume(meta, np.ones(meta.shape_zyx, dtype=np.int32)), d / "reg.nii")
    return {"skeleton_prob": "skel.nii", "canal": "canal.nii",
            "organs": "organs.nii", "regions": "reg.nii"}


def _station_meta(nx, ny, nz, spacing, z0=0):
    return GridMeta((nx, ny, nz), spacing, (0.0, 0.0, z0 * spacing[2]))


def test_two_stations_of_40_slices(tmp_path):
    spacing = (2.0, 2.0, 5.0)
    whole_meta = GridMeta((6, 6, 80), spacing)
    series = []
    for b in (50, 900):
        files = []
        for k, z0 in enumerate((0, 40)):
            meta = _station_meta(6, 6, 40, spacing, z0)
            vol = ScalarVolume(meta, np.full(meta.shape_zyx, 100.0 - b / 100 + k))
            name = f"b{b}_st{k}.nii"
            write_nifti(vol, tmp_path / name)
            files.append(name)
        series.append(files)
    masks = _write_masks(tmp_path, whole_meta)
    write_sidecar(tmp_path, (50.0, 900.0), series, ((0, 39), (40, 79)), masks, "pre")

    bundle = load_study(tmp_path)
    assert bundle.meta.dims == (6, 6, 80)
    assert bundle.station_slabs == ((0, 39), (40, 79))
    assert bundle.b_volumes[0].data[0, 0, 0] == pytest.approx(99.5)
    assert bundle.b_volumes[0].data[79, 0, 0] == pytest.approx(100.5)


def test_single_bvalue_is_insufficient(tmp_path):
    meta = GridMeta((4, 4, 4), (1, 1, 1))
    write_nifti(ScalarVolume(meta, np.ones(meta.shape_zyx)), tmp_path / "b900.nii")
    masks = _write_masks(tmp_path, meta)
    doc = {
        "sidecar_version": 1,
        "bvalues": [900.0],
        "series": [{"b": 900.0, "files": ["b900.nii"]}],
        "stations": [{"z_start": 0, "z_end": 3}],
        "masks": masks,
        "timepoint": "pre",
    }
    (tmp_path / "sidecar.json").write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="insufficient b-values"):
        load_manifest(tmp_path)


def test_unknown_sidecar_keys_rejected(tmp_path):
    meta = GridMeta((4, 4, 4), (1, 1, 1))
    masks = _write_masks(tmp_path, meta)
    doc = {
        "sidecar_version": 1,
        "bvalues": [50.0, 900.0],
        "series": [],
        "stations": [],
        "masks": masks,
        "timepoint": "pre",
        "extra": 1,
    }
    (tmp_path / "sidecar.json").write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="unknown keys"):
        load_manifest(tmp_path)


def test_missing_referenced_file(tmp_path):
    meta = GridMeta((4, 4, 4), (1, 1, 1))
    masks = _write_masks(tmp_path, meta)
    doc = {
        "sidecar_version": 1,
        "bvalues": [50.0, 900.0],
        "series": [
            {"b": 50.0, "files": ["nope.nii"]},
            {"b": 900.0, "files": ["nope.nii"]},
        ],
        "stations": [{"z_start": 0, "z_end": 3}],
        "masks": masks,
        "timepoint": "pre",
    }
    (tmp_path / "sidecar.json").write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="does not exist"):
        load_manifest(tmp_path)


def test_lower_b_resampled_to_highest_grid(tmp_path):
    # b50 at 2.0 mm in-plane, b900 at 1.6 mm: constant volumes stay constant
    meta50 = GridMeta((8, 8, 4), (2.0, 2.0, 5.0))
    meta900 = GridMeta((10, 10, 4), (1.6, 1.6, 5.0))
    write_nifti(ScalarVolume(meta50, np.full(meta50.shape_zyx, 200.0)), tmp_path / "b50.nii")
    write_nifti(ScalarVolume(meta900, np.full(meta900.shape_zyx, 90.0)), tmp_path / "b900.nii")
    masks = _write_masks(tmp_path, meta900)
    write_sidecar(
        tmp_path, (50.0, 900.0), [["b50.nii"], ["b900.nii"]], ((0, 3),), masks, "pre"
    )
    bundle = load_study(tmp_path)
    assert bundle.meta == meta900
    inside = bundle.b_volumes[0].data[:, 1:-3, 1:-3]
    assert np.allclose(inside, 200.0)


def test_whole_body_passthrough_is_identity(tmp_path):
    bundle, truth = generate_phantom(PhantomSpec(dims=(16, 16, 12), n_stations=2, seed=1))
    meta = bundle.meta
    for b, vol in zip(bundle.b_values, bundle.b_volumes):
        write_nifti(vol, tmp_path / f"b{b:g}.nii")
    masks = {
        "skeleton_prob": "skel.nii", "canal": "canal.nii",
        "organs": "organs.nii", "regions": "reg.nii",
    }
    write_nifti(bundle.skeleton_prob, tmp_path / masks["skeleton_prob"])
    write_nifti(bundle.canal_mask, tmp_path / masks["canal"])
    write_nifti(bundle.organ_mask, tmp_path / masks["organs"])
    write_nifti_labels(bundle.region_labels, tmp_path / masks["regions"])
    write_sidecar(
        tmp_path,
        bundle.b_values,
        [[f"b{b:g}.nii"] for b in bundle.b_values],
        bundle.station_slabs,
        masks,
        "pre",
    )
    back = load_study(tmp_path)
    for orig, rt in zip(bundle.b_volumes, back.b_volumes):
        np.testing.assert_array_equal(rt.data, orig.data.astype(np.float32).astype(np.float64))


def test_write_study_round_trip(tmp_path, clean_phantom):
    bundle, truth = clean_phantom
    write_study(tmp_path / "study", bundle, truth, "pre")
    back = load_study(tmp_path / "study")
    assert back.meta == bundle.meta
    assert back.station_slabs == bundle.station_slabs
    for orig, rt in zip(bundle.b_volumes, back.b_volumes):
        np.testing.assert_allclose(rt.data, orig.data, rtol=1e-6, atol=1e-4)
    np.testing.assert_array_equal(back.region_labels.data, bundle.region_labels.data)
