"""Evaluation statistics: overlap metrics, repeatability, rank tests,
diagnostic accuracy with Wilson intervals, and bootstrap cutoff optimization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from scipy.stats import norm as _norm
from scipy.stats import pearsonr, rankdata
from scipy.stats import t as _t

from .errors import ValidationError
from .grid import GridMeta, REGIONS
from .response import Benefit

RC_FACTOR = 1.96 * np.sqrt(2.0)


# ---------------------------------------------------------------------------
# Overlap metrics


@dataclass(frozen=True)
class OverlapReport:
    dice: float | None
    precision: float | None
    recall: float | None
    asd_mm: float | None
    n_auto: int
    n_manual: int
    n_intersection: int
    per_region: dict | None = None

    def to_json_dict(self) -> dict:
        out = {
            "dice": self.dice,
            "precision": self.precision,
            "recall": self.recall,
            "asd_mm": self.asd_mm,
            "n_auto": self.n_auto,
            "n_manual": self.n_manual,
            "n_intersection": self.n_intersection,
        }
        if self.per_region is not None:
            out["per_region"] = {
                name: rep.to_json_dict() for name, rep in self.per_region.items()
            }
        return out


def _boundary_coords_mm(mask: np.ndarray, meta: GridMeta) -> np.ndarray:
    """Physical coordinates of mask voxels with at least one face neighbour outside."""
    interior = ndimage.binary_erosion(
        mask, structure=ndimage.generate_binary_structure(3, 1), border_value=0
    )
    zyx = np.argwhere(mask & ~interior).astype(np.float64)
    sx, sy, sz = meta.spacing
    return zyx * np.array([sz, sy, sx])


def _asd_mm(a: np.ndarray, m: np.ndarray, meta: GridMeta) -> float | None:
    ba = _boundary_coords_mm(a, meta)
    bm = _boundary_coords_mm(m, meta)
    if ba.size == 0 or bm.size == 0:
        return None
    d_am = cKDTree(bm).query(ba)[0]
    d_ma = cKDTree(ba).query(bm)[0]
    return float((d_am.mean() + d_ma.mean()) / 2.0)


def overlap_metrics(
    auto: np.ndarray, manual: np.ndarray, meta: GridMeta, region_labels: np.ndarray | None = None
) -> OverlapReport:
    """Dice/precision/recall plus symmetric average surface distance in mm."""
    a = np.asarray(auto) > 0
    m = np.asarray(manual) > 0
    if a.shape != meta.shape_zyx or m.shape != meta.shape_zyx:
        raise ValidationError("masks must match the grid shape")
    na, nm = int(a.sum()), int(m.sum())
    ni = int((a & m).sum())
    if na == 0 and nm == 0:
        report = OverlapReport(None, None, None, None, 0, 0, 0)
    else:
        dice = 2.0 * ni / (na + nm)
        precision = ni / na if na else None
        recall = ni / nm if nm else None
        asd = _asd_mm(a, m, meta) if (na and nm) else None
        report = OverlapReport(dice, precision, recall, asd, na, nm, ni)
    if region_labels is None:
        return report
    per_region = {}
    labels = np.asarray(region_labels)
    for code in REGIONS:
        sel = labels == int(code)
        per_region[code.name] = overlap_metrics(a & sel, m & sel, meta)
    return OverlapReport(
        report.dice, report.precision, report.recall, report.asd_mm,
        report.n_auto, report.n_manual, report.n_intersection, per_region,
    )


# ---------------------------------------------------------------------------
# Repeatability (QIBA set) and Bland-Altman


@dataclass(frozen=True)
class Estimate:
    value: float | None
    ci: tuple[float, float] | None = None
    note: str | None = None

    def to_json_dict(self) -> dict:
        return {"value": self.value, "ci95": list(self.ci) if self.ci else None,
                "note": self.note}


@dataclass(frozen=True)
class RepeatabilityReport:
    n_subjects: int
    cov_pct: Estimate
    rc: Estimate
    rc_pct: Estimate
    sw: Estimate
    sb: Estimate
    icc: Estimate
    bias: Estimate
    loa: tuple[float, float]
    ttest_p: float

    def to_json_dict(self) -> dict:
        return {
            "n_subjects": self.n_subjects,
            "cov_pct": self.cov_pct.to_json_dict(),
            "rc": self.rc.to_json_dict(),
            "rc_pct": self.rc_pct.to_json_dict(),
            "sw": self.sw.to_json_dict(),
            "sb": self.sb.to_json_dict(),
            "icc": self.icc.to_json_dict(),
            "bias": self.bias.to_json_dict(),
            "loa": list(self.loa),
            "ttest_p": self.ttest_p,
        }


def _repeatability_point(x1: np.ndarray, x2: np.ndarray) -> dict:
    n = x1.size
    d = x2 - x1
    sw2 = float(np.mean(d**2) / 2.0)
    sw = float(np.sqrt(sw2))
    grand = float(np.concatenate([x1, x2]).mean())
    cov = 100.0 * sw / grand if grand != 0 else None
    rc = RC_FACTOR * sw
    rc_pct = 100.0 * rc / grand if grand != 0 else None
    means = (x1 + x2) / 2.0
    ms_within = sw2
    ms_between = 2.0 * float(np.var(means, ddof=1)) if n > 1 else 0.0
    sb2 = (ms_between - ms_within) / 2.0
    if sb2 < 0:
        sb = None
        icc = None
    else:
        sb = float(np.sqrt(sb2))
        icc = sb2 / (sb2 + sw2) if (sb2 + sw2) > 0 else None
    return {"cov_pct": cov, "rc": rc, "rc_pct": rc_pct, "sw": sw, "sb": sb, "icc": icc}


def _paired_t_p(d: np.ndarray) -> float:
    n = d.size
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return 1.0 if np.allclose(d, 0.0) else 0.0
    tval = float(np.mean(d)) / (sd / np.sqrt(n))
    return float(2.0 * _t.sf(abs(tval), n - 1))


def repeatability(
    pairs, n_boot: int = 1000, seed: int = 0, confidence: float = 0.95
) -> RepeatabilityReport:
    """Within-/between-subject variability per the same-day two-replicate design.

    Sw^2 = mean(d_i^2 / 2); RC = 1.96*sqrt(2)*Sw; Sb from one-way ANOVA with
    two replicates, reported "not calculable" when MS_between < MS_within.
    CIs are nonparametric percentile bootstrap over subjects.
    """
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("pairs must be an (N, 2) table of replicate measurements")
    if arr.shape[0] < 2:
        raise ValidationError("repeatability requires at least 2 subjects")
    x1, x2 = arr[:, 0], arr[:, 1]
    grand = float(arr.mean())
    if grand == 0:
        raise ValidationError("zero grand mean: CoV undefined")

    point = _repeatability_point(x1, x2)
    d = x2 - x1
    bias = float(d.mean())
    sd_d = float(np.std(d, ddof=1))
    loa = (bias - 1.96 * sd_d, bias + 1.96 * sd_d)
    ttest_p = _paired_t_p(d)

    boots: dict[str, list[float]] = {k: [] for k in point}
    boots["bias"] = []
    if n_boot > 0:
        rng = np.random.default_rng(seed)
        n = arr.shape[0]
        for _ in range(n_boot):
            idx = rng.integers(0, n, size=n)
            bp = _repeatability_point(x1[idx], x2[idx])
            for k, v in bp.items():
                if v is not None:
                    boots[k].append(v)
            boots["bias"].append(float((x2[idx] - x1[idx]).mean()))

    lo_q = 100.0 * (1.0 - confidence) / 2.0
    hi_q = 100.0 - lo_q

    def est(key: str, value: float | None, note: str | None = None) -> Estimate:
        vals = boots.get(key, [])
        ci = (
            (float(np.percentile(vals, lo_q)), float(np.percentile(vals, hi_q)))
            if len(vals) >= 2
            else None
        )
        if value is None:
            return Estimate(None, None, note or "not calculable")
        return Estimate(float(value), ci, note)

    return RepeatabilityReport(
        n_subjects=arr.shape[0],
        cov_pct=est("cov_pct", point["cov_pct"]),
        rc=est("rc", point["rc"]),
        rc_pct=est("rc_pct", point["rc_pct"]),
        sw=est("sw", point["sw"]),
        sb=est("sb", point["sb"]),
        icc=est("icc", point["icc"]),
        bias=est("bias", bias),
        loa=loa,
        ttest_p=ttest_p,
    )


@dataclass(frozen=True)
class BlandAltmanResult:
    bias: float
    sd: float
    loa: tuple[float, float]
    proportional_r: float | None
    proportional_p: float | None

    def to_json_dict(self) -> dict:
        return {
            "bias": self.bias,
            "sd": self.sd,
            "loa": list(self.loa),
            "proportional_r": self.proportional_r,
            "proportional_p": self.proportional_p,
        }


def bland_altman(pairs) -> BlandAltmanResult:
    """Bias and 95% limits of agreement; proportional bias via Pearson d vs mean."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValidationError("pairs must be an (N>=2, 2) table")
    d = arr[:, 1] - arr[:, 0]
    means = arr.mean(axis=1)
    bias = float(d.mean())
    sd = float(np.std(d, ddof=1))
    loa = (bias - 1.96 * sd, bias + 1.96 * sd)
    if np.ptp(d) == 0 or np.ptp(means) == 0 or arr.shape[0] < 3:
        r, p = None, None
    else:
        r, p = pearsonr(d, means)
        r, p = float(r), float(p)
    return BlandAltmanResult(bias, sd, loa, r, p)


# ---------------------------------------------------------------------------
# Rank tests


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+ (sum of ranks of positive differences)
    p_value: float
    n_used: int
    method: str  # "exact" | "normal" | "degenerate"


def _exact_wilcoxon_p(doubled_ranks: np.ndarray, w2: int, tail: str) -> float:
    """Exact tail probability of doubled W+ over all 2^n sign assignments."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:  # doubled ranks are integers >= 2
        new = counts.copy()
        new[r:] += counts[: counts.size - r]
        counts = new
    n = len(doubled_ranks)
    denom = 2.0**n
    p_ge = counts[w2:].sum() / denom
    p_le = counts[: w2 + 1].sum() / denom
    if tail == "greater":
        return float(p_ge)
    if tail == "less":
        return float(p_le)
    return float(min(1.0, 2.0 * min(p_ge, p_le)))


def wilcoxon_signed_rank(x, y, tail: str = "two") -> WilcoxonResult:
    """Paired signed-rank test: zeros dropped, ties average-ranked.

    Exact distribution for n <= 25; otherwise a tie-corrected normal
    approximation with continuity correction.
    """
    if tail not in ("two", "greater", "less"):
        raise ValidationError(f"tail must be two/greater/less, got {tail!r}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("x and y must be equal-length 1-D samples")
    d = x - y
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "degenerate")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= 25:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(round(2.0 * w_plus))
        p = _exact_wilcoxon_p(doubled, w2, tail)
        return WilcoxonResult(w_plus, p, n, "exact")
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    sigma = np.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
    if sigma == 0:
        return WilcoxonResult(w_plus, 1.0, n, "degenerate")
    p_greater = float(_norm.sf((w_plus - mu - 0.5) / sigma))
    p_less = float(_norm.cdf((w_plus - mu + 0.5) / sigma))
    if tail == "greater":
        p = p_greater
    elif tail == "less":
        p = p_less
    else:
        p = min(1.0, 2.0 * min(p_greater, p_less))
    return WilcoxonResult(w_plus, p, n, "normal")


@dataclass(frozen=True)
class SpearmanResult:
    r: float
    p_value: float
    interpretation: str


def _spearman_band(r: float) -> str:
    a = abs(r)
    if a >= 0.8:
        return "very strong"
    if a >= 0.6:
        return "strong"
    if a >= 0.4:
        return "moderate"
    return "weak"


def spearman(x, y) -> SpearmanResult:
    """Pearson correlation of average ranks; p from the t approximation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValidationError("spearman requires two equal-length samples, n >= 3")
    rx = rankdata(x)
    ry = rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise ValidationError("spearman undefined for constant input")
    r = float(np.corrcoef(rx, ry)[0, 1])
    if abs(r) > 1.0 - 1e-12:  # identical/reversed rank vectors up to rounding
        r = 1.0 if r > 0 else -1.0
    n = x.size
    if abs(r) >= 1.0:
        p = 0.0
    else:
        tval = r * np.sqrt((n - 2) / (1.0 - r * r))
        p = float(2.0 * _t.sf(abs(tval), n - 2))
    return SpearmanResult(r, p, _spearman_band(r))


# ---------------------------------------------------------------------------
# Proportions and diagnostic accuracy


def wilson_interval(
    successes: int, n: int, confidence: float = 0.95, continuity: bool = False
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, as fractions in [0, 1]."""
    if n <= 0:
        raise ValidationError("wilson_interval requires n > 0")
    if not 0 <= successes <= n:
        raise ValidationError(f"successes {successes} outside [0, {n}]")
    z = float(_norm.ppf((1.0 + confidence) / 2.0))
    p = successes / n
    z2 = z * z
    if not continuity:
        denom = 1.0 + z2 / n
        center = (p + z2 / (2 * n)) / denom
        half = z * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
        lo, hi = center - half, center + half
    else:
        lo_arg = max(0.0, z2 - 2 - 1 / n + 4 * p * (n * (1 - p) + 1))
        hi_arg = max(0.0, z2 + 2 - 1 / n + 4 * p * (n * (1 - p) - 1))
        lo = (
            (2 * n * p + z2 - 1 - z * np.sqrt(lo_arg)) / (2 * (n + z2))
            if successes > 0
            else 0.0
        )
        hi = (
            (2 * n * p + z2 + 1 + z * np.sqrt(hi_arg)) / (2 * (n + z2))
            if successes < n
            else 1.0
        )
    return (max(0.0, float(lo)), min(1.0, float(hi)))


@dataclass(frozen=True)
class Proportion:
    successes: int
    n: int
    fraction: float
    ci: tuple[float, float]

    def to_json_dict(self) -> dict:
        return {
            "successes": self.successes,
            "n": self.n,
            "fraction": self.fraction,
            "ci95": list(self.ci),
        }


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: Proportion
    sensitivity: Proportion
    specificity: Proportion
    n_review_excluded: int = 0

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy.to_json_dict(),
            "sensitivity": self.sensitivity.to_json_dict(),
            "specificity": self.specificity.to_json_dict(),
            "n_review_excluded": self.n_review_excluded,
        }


def _proportion(successes: int, n: int, continuity: bool) -> Proportion:
    return Proportion(successes, n, successes / n, wilson_interval(successes, n, 0.95, continuity))


def diagnostic_accuracy(
    predicted, reference, review_policy: str = "exclude", continuity: bool = False
) -> AccuracyReport:
    """Accuracy/sensitivity/specificity of Benefit (positive) vs NoBenefit.

    Review predictions are excluded by default; ``review_policy="no_benefit"``
    maps them to the conservative NoBenefit call instead.
    """
    if review_policy not in ("exclude", "no_benefit"):
        raise ValidationError(f"unknown review_policy {review_policy!r}")
    if len(predicted) != len(reference) or not predicted:
        raise ValidationError("predicted and reference must be equal-length and nonempty")
    pairs = []
    n_review = 0
    for pred, ref in zip(predicted, reference):
        if ref not in (Benefit.BENEFIT, Benefit.NO_BENEFIT):
            raise ValidationError("reference labels must be Benefit or NoBenefit")
        if pred == Benefit.INDETERMINATE:
            if review_policy == "exclude":
                n_review += 1
                continue
            pred = Benefit.NO_BENEFIT
        pairs.append((pred, ref))
    if not pairs:
        raise ValidationError("no evaluable cases after Review exclusion")
    tp = sum(1 for p, r in pairs if p == Benefit.BENEFIT and r == Benefit.BENEFIT)
    tn = sum(1 for p, r in pairs if p == Benefit.NO_BENEFIT and r == Benefit.NO_BENEFIT)
    pos = sum(1 for _, r in pairs if r == Benefit.BENEFIT)
    neg = len(pairs) - pos
    if pos == 0 or neg == 0:
        raise ValidationError("reference must contain both classes")
    return AccuracyReport(
        accuracy=_proportion(tp + tn, pos + neg, continuity),
        sensitivity=_proportion(tp, pos, continuity),
        specificity=_proportion(tn, neg, continuity),
        n_review_excluded=n_review,
    )


# ---------------------------------------------------------------------------
# Cutoff optimization


@dataclass(frozen=True)
class CutoffGrid:
    tdv_dec: tuple[float, float, float] = (-80.0, -10.0, 0.2)  # (lo, hi, step)
    gadc_inc: tuple[float, float, float] = (5.0, 50.0, 0.5)
    tdv_inc: tuple[float, float, float] = (10.0, 80.0, 0.5)

    def axis(self, which: str) -> np.ndarray:
        lo, hi, step = getattr(self, which)
        if step <= 0 or hi < lo:
            raise ValidationError(f"empty grid for {which}")
        n = int(round((hi - lo) / step))
        return lo + step * np.arange(n + 1)


@dataclass(frozen=True)
class CutoffSearchResult:
    responder_tdv_dec: float
    responder_gadc_inc: float
    responder_youden: float
    progression_tdv_inc: float
    progression_youden: float
    iterations: int
    ci_responder_tdv_dec: tuple[float, float] | None = None
    ci_responder_gadc_inc: tuple[float, float] | None = None
    ci_progression_tdv_inc: tuple[float, float] | None = None
    ci_responder_youden: tuple[float, float] | None = None
    ci_progression_youden: tuple[float, float] | None = None

    def to_json_dict(self) -> dict:
        def ci(v):
            return list(v) if v else None

        return {
            "responder": {
                "tdv_dec_pct": self.responder_tdv_dec,
                "gadc_inc_pct": self.responder_gadc_inc,
                "youden": self.responder_youden,
                "ci95_tdv_dec": ci(self.ci_responder_tdv_dec),
                "ci95_gadc_inc": ci(self.ci_responder_gadc_inc),
                "ci95_youden": ci(self.ci_responder_youden),
            },
            "progression": {
                "tdv_inc_pct": self.progression_tdv_inc,
                "youden": self.progression_youden,
                "ci95_tdv_inc": ci(self.ci_progression_tdv_inc),
                "ci95_youden": ci(self.ci_progression_youden),
            },
            "iterations": self.iterations,
        }


REC_DEFAULTS = (-40.0, 25.0, 40.0)


def _responder_search(dtv, dg, pos, dec_axis, ginc_axis):
    pos_f = pos.astype(np.float64)
    neg_f = 1.0 - pos_f
    n_pos, n_neg = pos_f.sum(), neg_f.sum()
    hit_dec = dtv[None, :] <= dec_axis[:, None]
    hit_g = dg[None, :] >= ginc_axis[:, None]
    pred = hit_dec[:, None, :] | hit_g[None, :, :]
    predf = pred.astype(np.float64)
    tp = predf @ pos_f
    fp = predf @ neg_f
    j = tp / n_pos + (n_neg - fp) / n_neg - 1.0
    best = j.max()
    cand = np.argwhere(j == best)
    dist = np.abs(dec_axis[cand[:, 0]] - REC_DEFAULTS[0]) + np.abs(
        ginc_axis[cand[:, 1]] - REC_DEFAULTS[1]
    )
    order = np.lexsort((ginc_axis[cand[:, 1]], dec_axis[cand[:, 0]], dist))
    i, k = cand[order[0]]
    return float(dec_axis[i]), float(ginc_axis[k]), float(best)


def _progression_search(dtv, pos, tinc_axis):
    pos_f = pos.astype(np.float64)
    neg_f = 1.0 - pos_f
    n_pos, n_neg = pos_f.sum(), neg_f.sum()
    flagged = dtv[None, :] > tinc_axis[:, None]  # predicted NoBenefit
    flaggedf = flagged.astype(np.float64)
    tp = (1.0 - flaggedf) @ pos_f  # Benefit predicted and true
    tn = flaggedf @ neg_f
    j = tp / n_pos + tn / n_neg - 1.0
    best = j.max()
    cand = np.nonzero(j == best)[0]
    dist = np.abs(tinc_axis[cand] - REC_DEFAULTS[2])
    order = np.lexsort((tinc_axis[cand], dist))
    return float(tinc_axis[cand[order[0]]]), float(best)


def optimize_cutoffs(
    deltas, reference, grid: CutoffGrid = CutoffGrid(), iterations: int = 200, seed: int = 0
) -> CutoffSearchResult:
    """Grid search for responder/progression cutoffs maximizing Youden's J.

    Responder rule: Benefit iff dTDV <= cut_dec or d-median-gADC >= cut_inc.
    Progression rule: NoBenefit iff dTDV > cut_inc. Ties prefer the
    pre-defined criteria values (-40, +25, +40). CIs are case-level
    percentile bootstrap with a per-iteration partitioned RNG stream.
    """
    rows = [
        (d.delta_tdv_pct, d.delta_median_gadc_pct, ref)
        for d, ref in zip(deltas, reference)
        if d.delta_tdv_pct is not None and d.delta_median_gadc_pct is not None
    ]
    if len(rows) < 10:
        raise ValidationError("cutoff search requires at least 10 cases with defined deltas")
    dtv = np.array([r[0] for r in rows])
    dg = np.array([r[1] for r in rows])
    pos = np.array([r[2] == Benefit.BENEFIT for r in rows])
    if pos.all() or not pos.any():
        raise ValidationError("cutoff search requires both classes in the reference")

    dec_axis = grid.axis("tdv_dec")
    ginc_axis = grid.axis("gadc_inc")
    tinc_axis = grid.axis("tdv_inc")

    cd, cg, j_resp = _responder_search(dtv, dg, pos, dec_axis, ginc_axis)
    ct, j_prog = _progression_search(dtv, pos, tinc_axis)

    cis: dict[str, tuple[float, float] | None] = {
        k: None
        for k in ("cd", "cg", "ct", "jr", "jp")
    }
    if iterations > 0:
        streams = np.random.SeedSequence(seed).spawn(iterations)
        samples: dict[str, list[float]] = {k: [] for k in cis}
        n = dtv.size
        for ss in streams:
            rng = np.random.default_rng(ss)
            idx = rng.integers(0, n, size=n)
            bpos = pos[idx]
            if bpos.all() or not bpos.any():
                continue  # single-class resample carries no cutoff information
            bcd, bcg, bjr = _responder_search(dtv[idx], dg[idx], bpos, dec_axis, ginc_axis)
            bct, bjp = _progression_search(dtv[idx], bpos, tinc_axis)
            for k, v in zip(("cd", "cg", "ct", "jr", "jp"), (bcd, bcg, bct, bjr, bjp)):
                samples[k].append(v)
        for k, vals in samples.items():
            if len(vals) >= 2:
                cis[k] = (float(np.percentile(vals, 2.5)), float(np.percentile(vals, 97.5)))

    return CutoffSearchResult(
        responder_tdv_dec=cd,
        responder_gadc_inc=cg,
        responder_youden=j_resp,
        progression_tdv_inc=ct,
        progression_youden=j_prog,
        iterations=iterations,
        ci_responder_tdv_dec=cis["cd"],
        ci_responder_gadc_inc=cis["cg"],
        ci_progression_tdv_inc=cis["ct"],
        ci_responder_youden=cis["jr"],
        ci_progression_youden=cis["jp"],
    )
