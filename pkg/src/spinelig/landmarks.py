"""Ligament landmark data model and its JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import EmptySet


class LigamentGroup(str, Enum):
    ALL = "ALL"  # anterior longitudinal
    PLL = "PLL"  # posterior longitudinal
    CL = "CL"  # capsular
    LF = "LF"  # ligamentum flavum
    ISL = "ISL"  # interspinous
    SSL = "SSL"  # supraspinous
    ITL = "ITL"  # intermuscular transverse


GROUPS = tuple(LigamentGroup)
SIDES = ("left", "right", "midline")
STATUSES = ("annotated", "registered", "projected", "fallback_nearest_vertex")
COMPLETE_COUNT = 66


@dataclass(frozen=True)
class Landmark:
    group: LigamentGroup
    bundle: int
    side: str
    position: np.ndarray
    status: str = "annotated"

    def __post_init__(self):
        object.__setattr__(self, "group", LigamentGroup(self.group))
        if self.side not in SIDES:
            raise ValueError(f"bad side {self.side!r}")
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")
        object.__setattr__(self, "bundle", int(self.bundle))
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))

    @property
    def key(self):
        return (self.group.value, self.bundle, self.side)


class LandmarkSet:
    """Ordered landmark collection keyed by ``(group, bundle, side)``."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        keys = [e.key for e in self.entries]
        if len(set(keys)) != len(keys):
            dup = sorted({k for k in keys if keys.count(k) > 1})
            raise ValueError(f"duplicate landmark keys {dup}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def keys(self):
        return [e.key for e in self.entries]

    @property
    def positions(self):
        return np.array([e.position for e in self.entries]).reshape(-1, 3)

    @property
    def statuses(self):
        return [e.status for e in self.entries]

    def is_complete(self):
        return len(self) == COMPLETE_COUNT

    def by_key(self):
        return {e.key: e for e in self.entries}

    def with_positions(self, positions, status=None):
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        return LandmarkSet(
            replace(e, position=p, status=status or e.status)
            for e, p in zip(self.entries, positions)
        )

    def group(self, group):
        group = LigamentGroup(group)
        return [e for e in self.entries if e.group is group]

    def to_json(self):
        return {"landmarks": [
            {"group": e.group.value, "bundle": e.bundle, "side": e.side,
             "xyz": [float(c) for c in e.position], "status": e.status}
            for e in self.entries
        ]}

    @classmethod
    def from_json(cls, data):
        return cls(
            Landmark(d["group"], d["bundle"], d["side"], d["xyz"], d.get("status", "annotated"))
            for d in data["landmarks"]
        )

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps() + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def landmark_group_stats(landmarks):
    """Mean landmark position per group and per (group, side).

    Returns
    -------
    by_group : dict[str, ndarray]
    by_group_side : dict[tuple[str, str], ndarray]
    """
    if len(landmarks) == 0:
        raise EmptySet("landmark set is empty")
    sums, counts = {}, {}
    for e in landmarks:
        for k in (e.group.value, (e.group.value, e.side)):
            sums[k] = sums.get(k, 0.0) + e.position
            counts[k] = counts.get(k, 0) + 1
    by_group = {k: sums[k] / counts[k] for k in sums if isinstance(k, str)}
    by_side = {k: sums[k] / counts[k] for k in sums if isinstance(k, tuple)}
    return by_group, by_side
