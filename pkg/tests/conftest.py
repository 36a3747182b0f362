import numpy as np
import pytest

from wbdwi.grid import GridMeta, LabelVolume, ScalarVolume, StudyBundle
from wbdwi.phantom import PhantomSpec, generate_phantom


@pytest.fixture(scope="session")
def gain_phantom():
    """Noiseless 3-station phantom with planted gains, shared across tests."""
    spec = PhantomSpec(
        n_auto_lesions=4, seed=7, station_gains=(1.0, 1.3, 0.8), scan_gain=1.6
    )
    return generate_phantom(spec)


@pytest.fixture(scope="session")
def clean_phantom():
    """Noiseless unit-gain phantom."""
    return generate_phantom(PhantomSpec(n_auto_lesions=4, seed=3))


def make_bundle(data_by_b, spacing=(2.0, 2.0, 5.0), slabs=None, **mask_overrides):
    """Minimal StudyBundle around explicit per-b arrays (z, y, x)."""
    bs = sorted(data_by_b)
    shape = np.asarray(data_by_b[bs[0]]).shape
    nz, ny, nx = shape
    meta = GridMeta((nx, ny, nz), spacing)
    if slabs is None:
        slabs = ((0, nz - 1),)
    zeros = np.zeros(shape)
    canal = mask_overrides.get("canal", zeros)
    organs = mask_overrides.get("organs", zeros)
    skeleton = mask_overrides.get("skeleton", np.ones(shape))
    regions = mask_overrides.get("regions", np.ones(shape, dtype=np.int32))
    return StudyBundle(
        b_values=tuple(float(b) for b in bs),
        b_volumes=tuple(ScalarVolume(meta, np.asarray(data_by_b[b], dtype=float)) for b in bs),
        station_slabs=slabs,
        skeleton_prob=ScalarVolume(meta, skeleton),
        canal_mask=ScalarVolume(meta, canal),
        organ_mask=ScalarVolume(meta, organs),
        region_labels=LabelVolume(meta, regions),
    )
