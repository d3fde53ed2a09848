"""Accuracy metrics comparing detected landmarks against a reference set."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import KeyMismatch


@dataclass
class EvaluationReport:
    """Landmark accuracy summary.

    ``per_group_mm`` is the distance between the mean detected and mean
    reference landmark of each group, so symmetric errors within a group
    cancel. ``avg_mm`` averages the group values; ``rmse_mm`` is taken over
    individual landmarks and does not hide such errors.
    """

    per_group_mm: dict
    avg_mm: float
    rmse_mm: float
    runtime_s: float | None = None
    residuals: dict = field(default_factory=dict)
    stage_s: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "per_group_mm": {k: float(v) for k, v in self.per_group_mm.items()},
            "avg_mm": float(self.avg_mm),
            "rmse_mm": float(self.rmse_mm),
            "runtime_s": None if self.runtime_s is None else float(self.runtime_s),
            "stage_s": {k: float(v) for k, v in self.stage_s.items()},
            "residuals": [
                {"group": g, "bundle": b, "side": s, "mm": float(d)}
                for (g, b, s), d in self.residuals.items()
            ],
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


def evaluate(detected, truth, runtime_s=None):
    """Compare two landmark sets with identical ``(group, bundle, side)`` keys.

    Raises
    ------
    KeyMismatch
        Lists keys present in only one of the sets.
    """
    det, ref = detected.by_key(), truth.by_key()
    missing_det = sorted(set(ref) - set(det))
    missing_ref = sorted(set(det) - set(ref))
    if missing_det or missing_ref:
        raise KeyMismatch(missing_det, missing_ref)

    keys = [e.key for e in truth]
    a = np.array([det[k].position for k in keys]).reshape(-1, 3)
    b = np.array([ref[k].position for k in keys]).reshape(-1, 3)
    dist = np.linalg.norm(a - b, axis=1)

    per_group = {}
    groups = [k[0] for k in keys]
    for g in dict.fromkeys(groups):
        sel = np.array([x == g for x in groups])
        per_group[g] = float(np.linalg.norm(a[sel].mean(axis=0) - b[sel].mean(axis=0)))
    avg = float(np.mean(list(per_group.values()))) if per_group else 0.0
    rmse = float(np.sqrt(np.mean(dist * dist))) if len(dist) else 0.0
    return EvaluationReport(per_group, avg, rmse, runtime_s, dict(zip(keys, dist.tolist())))
