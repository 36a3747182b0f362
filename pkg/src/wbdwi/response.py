"""Response Evaluation Criteria: biomarker deltas and the decision matrix.

The matrix crosses a TDV category (significant increase / no change /
significant decrease, where ROI-count growth also counts as increase)
with a median-gADC category (significant increase / not). Boundary
inclusivity is: TDV increase strictly > +40%, TDV decrease <= -40%,
gADC increase >= +25%, ROI growth >= +10 (>1 mL) or >= +6 (>3 mL).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .biomarkers import BiomarkerRecord
from .grid import RegionCode


class TdvCategory(Enum):
    SIG_INCREASE = "SigIncrease"
    NO_CHANGE = "NoChange"
    SIG_DECREASE = "SigDecrease"


class GadcCategory(Enum):
    SIG_INCREASE = "SigIncrease"
    NOT_INCREASE = "NotIncrease"


class Outcome(Enum):
    RESPONDER = "Responder"
    STABLE = "Stable"
    PROGRESSION = "Progression"
    REVIEW = "Review"


class Benefit(Enum):
    BENEFIT = "Benefit"
    NO_BENEFIT = "NoBenefit"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ResponseCutoffs:
    tdv_increase_pct: float = 40.0
    tdv_decrease_pct: float = -40.0
    gadc_increase_pct: float = 25.0
    roi_gt_1ml_increase: int = 10
    roi_gt_3ml_increase: int = 6


@dataclass(frozen=True)
class DeltaRecord:
    """Percentage changes post vs pre; None marks an undefined (zero) baseline."""

    delta_tdv_pct: float | None
    delta_median_gadc_pct: float | None
    delta_roi_gt_1ml: int
    delta_roi_gt_3ml: int

    def to_json_dict(self) -> dict:
        return {
            "delta_tdv_pct": self.delta_tdv_pct,
            "delta_median_gadc_pct": self.delta_median_gadc_pct,
            "delta_roi_gt_1ml": self.delta_roi_gt_1ml,
            "delta_roi_gt_3ml": self.delta_roi_gt_3ml,
        }


@dataclass(frozen=True)
class RecOutcome:
    tdv_category: TdvCategory | None
    gadc_category: GadcCategory | None
    outcome: Outcome
    benefit: Benefit
    rationale: str

    def to_json_dict(self) -> dict:
        return {
            "tdv_category": self.tdv_category.value if self.tdv_category else None,
            "gadc_category": self.gadc_category.value if self.gadc_category else None,
            "outcome": self.outcome.value,
            "benefit": self.benefit.value,
            "rationale": self.rationale,
        }


def percent_change(pre: float, post: float) -> float | None:
    """100 * (post - pre) / pre, or None when the baseline is not positive."""
    if pre is None or pre <= 0:
        return None
    return 100.0 * (post - pre) / pre


def compute_deltas(pre: BiomarkerRecord, post: BiomarkerRecord) -> DeltaRecord:
    pre_whole = pre.regions[RegionCode.WHOLE_SKELETON]
    post_whole = post.regions[RegionCode.WHOLE_SKELETON]
    pre_med = pre_whole.gadc.median if pre_whole.gadc else None
    post_med = post_whole.gadc.median if post_whole.gadc else None
    d_gadc = (
        percent_change(pre_med, post_med)
        if pre_med is not None and post_med is not None
        else None
    )
    return DeltaRecord(
        delta_tdv_pct=percent_change(pre_whole.tdv_ml, post_whole.tdv_ml),
        delta_median_gadc_pct=d_gadc,
        delta_roi_gt_1ml=post_whole.roi_count_gt_1ml - pre_whole.roi_count_gt_1ml,
        delta_roi_gt_3ml=post_whole.roi_count_gt_3ml - pre_whole.roi_count_gt_3ml,
    )


def categorize_tdv(
    delta_tdv_pct: float,
    delta_roi_gt_1ml: int,
    delta_roi_gt_3ml: int,
    cutoffs: ResponseCutoffs = ResponseCutoffs(),
) -> tuple[TdvCategory, str]:
    """TDV category plus the clause that triggered it."""
    roi_growth = (
        delta_roi_gt_1ml >= cutoffs.roi_gt_1ml_increase
        or delta_roi_gt_3ml >= cutoffs.roi_gt_3ml_increase
    )
    if delta_tdv_pct > cutoffs.tdv_increase_pct or roi_growth:
        clause = (
            f"TDV {delta_tdv_pct:+.1f}% > {cutoffs.tdv_increase_pct:+g}%"
            if delta_tdv_pct > cutoffs.tdv_increase_pct
            else f"ROI growth (+{delta_roi_gt_1ml} >1mL, +{delta_roi_gt_3ml} >3mL)"
        )
        if roi_growth and delta_tdv_pct <= cutoffs.tdv_decrease_pct:
            clause += "; conflicting TDV decrease, review advised"
        return TdvCategory.SIG_INCREASE, clause
    if delta_tdv_pct <= cutoffs.tdv_decrease_pct:
        return (
            TdvCategory.SIG_DECREASE,
            f"TDV {delta_tdv_pct:+.1f}% <= {cutoffs.tdv_decrease_pct:+g}%",
        )
    return TdvCategory.NO_CHANGE, f"TDV {delta_tdv_pct:+.1f}% within bounds"


def categorize_gadc(
    delta_median_gadc_pct: float, cutoffs: ResponseCutoffs = ResponseCutoffs()
) -> tuple[GadcCategory, str]:
    if delta_median_gadc_pct >= cutoffs.gadc_increase_pct:
        return (
            GadcCategory.SIG_INCREASE,
            f"median gADC {delta_median_gadc_pct:+.1f}% >= {cutoffs.gadc_increase_pct:+g}%",
        )
    return (
        GadcCategory.NOT_INCREASE,
        f"median gADC {delta_median_gadc_pct:+.1f}% below increase cutoff",
    )


_MATRIX: dict[tuple[TdvCategory, GadcCategory], Outcome] = {
    (TdvCategory.SIG_INCREASE, GadcCategory.SIG_INCREASE): Outcome.REVIEW,
    (TdvCategory.NO_CHANGE, GadcCategory.SIG_INCREASE): Outcome.RESPONDER,
    (TdvCategory.SIG_DECREASE, GadcCategory.SIG_INCREASE): Outcome.RESPONDER,
    (TdvCategory.SIG_INCREASE, GadcCategory.NOT_INCREASE): Outcome.PROGRESSION,
    (TdvCategory.NO_CHANGE, GadcCategory.NOT_INCREASE): Outcome.STABLE,
    (TdvCategory.SIG_DECREASE, GadcCategory.NOT_INCREASE): Outcome.RESPONDER,
}

_BENEFIT: dict[Outcome, Benefit] = {
    Outcome.RESPONDER: Benefit.BENEFIT,
    Outcome.STABLE: Benefit.BENEFIT,
    Outcome.PROGRESSION: Benefit.NO_BENEFIT,
    Outcome.REVIEW: Benefit.INDETERMINATE,
}


def rec_classify(deltas: DeltaRecord, cutoffs: ResponseCutoffs = ResponseCutoffs()) -> RecOutcome:
    if deltas.delta_tdv_pct is None or deltas.delta_median_gadc_pct is None:
        return RecOutcome(
            tdv_category=None,
            gadc_category=None,
            outcome=Outcome.REVIEW,
            benefit=Benefit.INDETERMINATE,
            rationale="undefined baseline",
        )
    tdv_cat, tdv_why = categorize_tdv(
        deltas.delta_tdv_pct, deltas.delta_roi_gt_1ml, deltas.delta_roi_gt_3ml, cutoffs
    )
    gadc_cat, gadc_why = categorize_gadc(deltas.delta_median_gadc_pct, cutoffs)
    outcome = _MATRIX[(tdv_cat, gadc_cat)]
    return RecOutcome(
        tdv_category=tdv_cat,
        gadc_category=gadc_cat,
        outcome=outcome,
        benefit=_BENEFIT[outcome],
        rationale=f"{tdv_why}; {gadc_why} -> {outcome.value}",
    )
