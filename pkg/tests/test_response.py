import itertools

import pytest

from wbdwi.response import (
    Benefit,
    DeltaRecord,
    GadcCategory,
    Outcome,
    ResponseCutoffs,
    TdvCategory,
    categorize_gadc,
    categorize_tdv,
    percent_change,
    rec_classify,
)


def test_percent_change_examples():
    assert percent_change(100.0, 60.0) == pytest.approx(-40.0)
    assert percent_change(7.0, 7.0) == 0.0
    # cohort-median sanity fixture: 164 mL pre vs 155 mL post
    assert percent_change(164.0, 155.0) == pytest.approx(-5.49, abs=0.01)
    assert percent_change(0.0, 10.0) is None
    assert percent_change(-5.0, 10.0) is None


def test_tdv_category_boundaries():
    cut = ResponseCutoffs()
    assert categorize_tdv(41.0, 0, 0, cut)[0] == TdvCategory.SIG_INCREASE
    assert categorize_tdv(40.0, 0, 0, cut)[0] == TdvCategory.NO_CHANGE  # strict >
    assert categorize_tdv(40.01, 0, 0, cut)[0] == TdvCategory.SIG_INCREASE
    assert categorize_tdv(-40.0, 0, 0, cut)[0] == TdvCategory.SIG_DECREASE  # inclusive <=
    assert categorize_tdv(-39.99, 0, 0, cut)[0] == TdvCategory.NO_CHANGE


def test_tdv_roi_growth_rules():
    cut = ResponseCutoffs()
    assert categorize_tdv(-10.0, 10, 0, cut)[0] == TdvCategory.SIG_INCREASE
    assert categorize_tdv(-10.0, 9, 0, cut)[0] == TdvCategory.NO_CHANGE
    assert categorize_tdv(-10.0, 0, 6, cut)[0] == TdvCategory.SIG_INCREASE
    assert categorize_tdv(-10.0, 0, 5, cut)[0] == TdvCategory.NO_CHANGE
    # ROI growth beats a significant decrease, with a review note
    cat, why = categorize_tdv(-50.0, 0, 7, cut)
    assert cat == TdvCategory.SIG_INCREASE
    assert "review" in why.lower()


def test_gadc_category_boundaries():
    cut = ResponseCutoffs()
    assert categorize_gadc(25.0, cut)[0] == GadcCategory.SIG_INCREASE  # inclusive >=
    assert categorize_gadc(24.9, cut)[0] == GadcCategory.NOT_INCREASE
    assert categorize_gadc(-30.0, cut)[0] == GadcCategory.NOT_INCREASE


def _delta(tdv, gadc, roi1=0, roi3=0):
    return DeltaRecord(tdv, gadc, roi1, roi3)


# representative deltas for each category
_TDV_REP = {
    TdvCategory.SIG_INCREASE: 50.0,
    TdvCategory.NO_CHANGE: 0.0,
    TdvCategory.SIG_DECREASE: -50.0,
}
_GADC_REP = {GadcCategory.SIG_INCREASE: 30.0, GadcCategory.NOT_INCREASE: 0.0}

_EXPECTED = {
    (TdvCategory.SIG_INCREASE, GadcCategory.SIG_INCREASE): (
        Outcome.REVIEW, Benefit.INDETERMINATE),
    (TdvCategory.NO_CHANGE, GadcCategory.SIG_INCREASE): (
        Outcome.RESPONDER, Benefit.BENEFIT),
    (TdvCategory.SIG_DECREASE, GadcCategory.SIG_INCREASE): (
        Outcome.RESPONDER, Benefit.BENEFIT),
    (TdvCategory.SIG_INCREASE, GadcCategory.NOT_INCREASE): (
        Outcome.PROGRESSION, Benefit.NO_BENEFIT),
    (TdvCategory.NO_CHANGE, GadcCategory.NOT_INCREASE): (
        Outcome.STABLE, Benefit.BENEFIT),
    (TdvCategory.SIG_DECREASE, GadcCategory.NOT_INCREASE): (
        Outcome.RESPONDER, Benefit.BENEFIT),
}


def test_decision_matrix_exhaustive():
    for tdv_cat, gadc_cat in itertools.product(TdvCategory, GadcCategory):
        rec = rec_classify(_delta(_TDV_REP[tdv_cat], _GADC_REP[gadc_cat]))
        assert rec.tdv_category == tdv_cat
        assert rec.gadc_category == gadc_cat
        outcome, benefit = _EXPECTED[(tdv_cat, gadc_cat)]
        assert rec.outcome == outcome
        assert rec.benefit == benefit
        assert rec.rationale


def test_named_cells():
    rec = rec_classify(_delta(-50.0, 30.0))
    assert (rec.outcome, rec.benefit) == (Outcome.RESPONDER, Benefit.BENEFIT)
    rec = rec_classify(_delta(50.0, 0.0))
    assert (rec.outcome, rec.benefit) == (Outcome.PROGRESSION, Benefit.NO_BENEFIT)
    rec = rec_classify(_delta(0.0, 0.0))
    assert (rec.outcome, rec.benefit) == (Outcome.STABLE, Benefit.BENEFIT)
    rec = rec_classify(_delta(50.0, 30.0))
    assert (rec.outcome, rec.benefit) == (Outcome.REVIEW, Benefit.INDETERMINATE)


def test_undefined_baseline_goes_to_review():
    rec = rec_classify(_delta(None, 30.0))
    assert rec.outcome == Outcome.REVIEW
    assert rec.benefit == Benefit.INDETERMINATE
    assert "undefined baseline" in rec.rationale
    rec = rec_classify(_delta(-50.0, None))
    assert rec.outcome == Outcome.REVIEW


def test_monotone_tdv_toward_benefit():
    # with gADC NotIncrease, lowering dTDV never moves Benefit -> NoBenefit
    order = {Benefit.NO_BENEFIT: 0, Benefit.INDETERMINATE: 1, Benefit.BENEFIT: 2}
    last = None
    for tdv in (80.0, 41.0, 40.0, 10.0, 0.0, -39.9, -40.0, -80.0):
        rec = rec_classify(_delta(tdv, 0.0))
        rank = order[rec.benefit]
        if last is not None:
            assert rank >= last
        last = rank


def test_custom_cutoffs_respected():
    cut = ResponseCutoffs(tdv_increase_pct=36.0, tdv_decrease_pct=-42.6,
                          gadc_increase_pct=28.0)
    assert categorize_tdv(37.0, 0, 0, cut)[0] == TdvCategory.SIG_INCREASE
    assert categorize_tdv(-42.6, 0, 0, cut)[0] == TdvCategory.SIG_DECREASE
    assert categorize_gadc(28.0, cut)[0] == GadcCategory.SIG_INCREASE
    assert categorize_gadc(27.9, cut)[0] == GadcCategory.NOT_INCREASE
