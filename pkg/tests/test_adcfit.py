import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbdwi.adcfit import compute_cdwi, fit_monoexponential
from wbdwi.errors import ValidationError
from conftest import make_bundle


def test_two_point_fit_is_exact():
    bundle = make_bundle({
        50: np.full((2, 2, 2), 951.229),
        900: np.full((2, 2, 2), 406.570),
    })
    fit = fit_monoexponential(bundle)
    assert fit.gadc.data[0, 0, 0] == pytest.approx(1.0e-3, rel=1e-5)
    assert fit.s0.data[0, 0, 0] == pytest.approx(1000.0, rel=1e-5)
    assert np.all(fit.valid_mask.data == 1.0)


def test_three_point_noiseless_fit_is_exact():
    s0, adc = 1000.0, 0.8e-3
    bundle = make_bundle({
        b: np.full((2, 2, 2), s0 * np.exp(-b * adc)) for b in (50, 600, 900)
    })
    fit = fit_monoexponential(bundle)
    assert fit.gadc.data[0, 0, 0] == pytest.approx(adc, abs=1e-12)
    # the stated signals for this fixture
    assert bundle.b_volumes[0].data[0, 0, 0] == pytest.approx(960.789, abs=1e-3)
    assert bundle.b_volumes[1].data[0, 0, 0] == pytest.approx(618.783, abs=1e-3)
    assert bundle.b_volumes[2].data[0, 0, 0] == pytest.approx(486.752, abs=1e-3)


def test_noise_error_bound_from_monte_carlo_oracle():
    # Bound 2.5e-5 frozen from an independent per-voxel polyfit oracle
    # (sigma = 1% of S0, b = 50/600/900, ADC = 0.9e-3, 1e4 voxels).
    rng = np.random.default_rng(20260808)
    s0, adc = 1000.0, 0.9e-3
    shape = (25, 20, 20)  # 1e4 voxels
    bundle = make_bundle({
        b: s0 * np.exp(-b * adc) + rng.normal(0, 0.01 * s0, size=shape)
        for b in (50, 600, 900)
    })
    fit = fit_monoexponential(bundle)
    valid = fit.valid_mask.data > 0
    err = np.abs(fit.gadc.data[valid] - adc)
    med = np.median(err)
    assert med < 2.5e-5
    assert med > 5e-6  # sanity: noise is actually present


def test_nonpositive_signals_invalidate_voxel():
    data50 = np.full((2, 2, 2), 100.0)
    data900 = np.full((2, 2, 2), 50.0)
    data900[0, 0, 0] = 0.0
    data50[1, 1, 1] = -3.0
    bundle = make_bundle({50: data50, 900: data900})
    fit = fit_monoexponential(bundle)
    assert fit.valid_mask.data[0, 0, 0] == 0.0
    assert fit.gadc.data[0, 0, 0] == 0.0
    assert fit.s0.data[0, 0, 0] == 0.0
    assert fit.valid_mask.data[1, 1, 1] == 0.0
    assert fit.valid_mask.data[0, 1, 1] == 1.0


def test_adc_clamped_to_ceiling_and_floor():
    # rising signal implies negative ADC: clamped to 0, still valid
    rising = make_bundle({50: np.full((1, 1, 1), 100.0), 900: np.full((1, 1, 1), 200.0)})
    fit = fit_monoexponential(rising)
    assert fit.gadc.data[0, 0, 0] == 0.0
    assert fit.valid_mask.data[0, 0, 0] == 1.0
    # absurdly fast decay clamps at the free-water ceiling
    fast = make_bundle({50: np.full((1, 1, 1), 1000.0), 900: np.full((1, 1, 1), 1e-3)})
    fit = fit_monoexponential(fast)
    assert fit.gadc.data[0, 0, 0] == 4.0e-3


def test_duplicate_bvalues_rejected():
    with pytest.raises(ValidationError):
        make_bundle({900: np.ones((1, 1, 1)), 900.0: np.ones((1, 1, 1))})


@settings(max_examples=40, deadline=None)
@given(
    st.floats(10.0, 1e4),
    st.floats(0.0, 3.0e-3),
    st.lists(st.integers(1, 1500), min_size=2, max_size=5, unique=True),
)
def test_exact_recovery_on_noiseless_decays(s0, adc, bvals):
    bundle = make_bundle({b: np.full((1, 1, 1), s0 * np.exp(-b * adc)) for b in bvals})
    fit = fit_monoexponential(bundle)
    assert fit.gadc.data[0, 0, 0] == pytest.approx(adc, abs=1e-10)
    assert fit.s0.data[0, 0, 0] == pytest.approx(s0, rel=1e-9)


def test_cdwi_closed_form():
    bundle = make_bundle({
        50: np.full((1, 1, 1), 951.229), 900: np.full((1, 1, 1), 406.570)
    })
    fit = fit_monoexponential(bundle)
    cdwi = compute_cdwi(fit, 900.0)
    assert cdwi.data[0, 0, 0] == pytest.approx(406.570, rel=1e-5)


def test_cdwi_rejects_nonpositive_b_and_limits_to_s0():
    bundle = make_bundle({
        50: np.full((1, 1, 1), 951.229), 900: np.full((1, 1, 1), 406.570)
    })
    fit = fit_monoexponential(bundle)
    with pytest.raises(ValidationError):
        compute_cdwi(fit, 0.0)
    with pytest.raises(ValidationError):
        compute_cdwi(fit, -10.0)
    near_zero = compute_cdwi(fit, 1e-9)
    assert near_zero.data[0, 0, 0] == pytest.approx(fit.s0.data[0, 0, 0], rel=1e-6)


def test_cdwi_reproduces_measured_b900_on_two_point_data():
    rng = np.random.default_rng(3)
    s900 = rng.uniform(50, 500, size=(3, 3, 3))
    s50 = s900 * rng.uniform(1.5, 4.0, size=(3, 3, 3))
    bundle = make_bundle({50: s50, 900: s900})
    fit = fit_monoexponential(bundle)
    cdwi = compute_cdwi(fit, 900.0)
    np.testing.assert_allclose(cdwi.data, s900, rtol=1e-6)


def test_cdwi_monotone_decreasing_in_b():
    bundle = make_bundle({
        50: np.full((1, 1, 1), 951.229), 900: np.full((1, 1, 1), 406.570)
    })
    fit = fit_monoexponential(bundle)
    values = [compute_cdwi(fit, b).data[0, 0, 0] for b in (100, 400, 800, 1200)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_scaling_equivariance():
    rng = np.random.default_rng(9)
    s900 = rng.uniform(50, 500, size=(2, 2, 2))
    s50 = s900 * rng.uniform(1.5, 4.0, size=(2, 2, 2))
    fit1 = fit_monoexponential(make_bundle({50: s50, 900: s900}))
    fit2 = fit_monoexponential(make_bundle({50: 3.0 * s50, 900: 3.0 * s900}))
    np.testing.assert_allclose(fit2.gadc.data, fit1.gadc.data, atol=1e-15)
    np.testing.assert_allclose(fit2.s0.data, 3.0 * fit1.s0.data, rtol=1e-12)


def test_invalid_voxels_zero_in_cdwi():
    data900 = np.full((1, 1, 2), 50.0)
    data900[0, 0, 1] = -1.0
    bundle = make_bundle({50: np.full((1, 1, 2), 100.0), 900: data900})
    fit = fit_monoexponential(bundle)
    cdwi = compute_cdwi(fit, 900.0)
    assert cdwi.data[0, 0, 1] == 0.0
    assert cdwi.data[0, 0, 0] > 0.0
