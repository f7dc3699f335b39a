"""Displacement metrics for sampled forecasts.

ADE is the mean L2 error over all agent-frames, FDE the mean L2 error at the
final frame. Best-of-h variants (mADE/mFDE) take the minimum over h sampled
futures of the aggregate metric; the miss rate is the fraction of agents
whose best final error over the h samples still exceeds 2 meters. The
category-weighted combination uses the fixed coefficients 0.2 (car),
0.58 (pedestrian) and 0.22 (rider).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data.types import AgentCategory
from .errors import ShapeMismatchError, ValidationError

MISS_THRESHOLD_M = 2.0
CATEGORY_WEIGHTS = {
    AgentCategory.CAR: 0.2,
    AgentCategory.PEDESTRIAN: 0.58,
    AgentCategory.RIDER: 0.22,
}


@dataclass
class MetricValues:
    ade: float = float("nan")
    fde: float = float("nan")
    made: float = float("nan")
    mfde: float = float("nan")
    mr: float = float("nan")

    def as_dict(self):
        return {"ade": self.ade, "fde": self.fde, "made": self.made,
                "mfde": self.mfde, "mr": self.mr}


@dataclass
class MetricReport:
    overall: MetricValues
    per_category: dict = field(default_factory=dict)  # AgentCategory -> MetricValues
    h: int = 1
    trials: int = 1

    def as_dict(self):
        out = {"h": self.h, "trials": self.trials, "overall": self.overall.as_dict()}
        for cat, values in self.per_category.items():
            out[cat.value] = values.as_dict()
        return out


def ade_fde(pred: np.ndarray, truth: np.ndarray):
    """(ADE, FDE) for one prediction set; both arrays are (N, T_pred, 2)."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 3 or pred.shape[-1] != 2:
        raise ShapeMismatchError("ade_fde", pred.shape, truth.shape)
    err = np.linalg.norm(pred - truth, axis=-1)  # (N, T)
    return float(err.mean()), float(err[:, -1].mean())


def best_of_h(samples: np.ndarray, truth: np.ndarray):
    """(mADE, mFDE, MR) over h sampled futures.

    samples: (h, N, T_pred, 2); truth: (N, T_pred, 2). mADE/mFDE minimize the
    aggregate metric over draws; MR counts agents whose per-agent best FDE
    exceeds the 2 m threshold.
    """
    samples = np.asarray(samples, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if samples.ndim != 4 or samples.shape[1:] != truth.shape:
        raise ShapeMismatchError("best_of_h", samples.shape, truth.shape)
    err = np.linalg.norm(samples - truth[None], axis=-1)  # (h, N, T)
    ades = err.mean(axis=(1, 2))  # (h,)
    fdes = err[:, :, -1].mean(axis=1)  # (h,)
    per_agent_best_fde = err[:, :, -1].min(axis=0)  # (N,)
    mr = float(np.mean(per_agent_best_fde > MISS_THRESHOLD_M))
    return float(ades.min()), float(fdes.min()), mr


def weighted_metrics(per_category: dict):
    """(wADE, wFDE) from per-category (made, mfde) pairs.

    Missing categories contribute zero with a warning; the weights sum to 1.
    """
    wade = 0.0
    wfde = 0.0
    for cat, weight in CATEGORY_WEIGHTS.items():
        if cat not in per_category:
            warnings.warn(f"category {cat.value!r} absent; it contributes 0 to wADE/wFDE")
            continue
        made, mfde = per_category[cat]
        wade += weight * made
        wfde += weight * mfde
    return wade, wfde


def evaluate_samples(samples: np.ndarray, truth: np.ndarray, categories, h: int | None = None):
    """Full MetricReport (overall + per category) for one sample set."""
    if h is None:
        h = samples.shape[0]
    ade, fde = ade_fde(samples.mean(axis=0), truth)
    made, mfde, mr = best_of_h(samples, truth)
    overall = MetricValues(ade=ade, fde=fde, made=made, mfde=mfde, mr=mr)
    per_category = {}
    categories = list(categories)
    for cat in AgentCategory:
        idx = [i for i, c in enumerate(categories) if c == cat]
        if not idx:
            continue
        c_ade, c_fde = ade_fde(samples.mean(axis=0)[idx], truth[idx])
        c_made, c_mfde, c_mr = best_of_h(samples[:, idx], truth[idx])
        per_category[cat] = MetricValues(ade=c_ade, fde=c_fde, made=c_made, mfde=c_mfde, mr=c_mr)
    return MetricReport(overall=overall, per_category=per_category, h=h, trials=1)


def min_over_trials(reports):
    """Field-wise minimum across repeated test trials."""
    reports = list(reports)
    if not reports:
        raise ValidationError("min_over_trials needs at least one report")

    def reduce(values_list):
        out = MetricValues()
        for name in ("ade", "fde", "made", "mfde", "mr"):
            vals = [getattr(v, name) for v in values_list if not np.isnan(getattr(v, name))]
            if vals:
                setattr(out, name, float(min(vals)))
        return out

    cats = set()
    for rep in reports:
        cats.update(rep.per_category)
    per_category = {
        cat: reduce([rep.per_category[cat] for rep in reports if cat in rep.per_category])
        for cat in cats
    }
    return MetricReport(
        overall=reduce([rep.overall for rep in reports]),
        per_category=per_category,
        h=reports[0].h,
        trials=len(reports),
    )
