"""
Points of interest: named outermost extrema of the sagittal and frontal
cross sections, used as registration correspondences.

All extrema are measured in frame coordinates ``l`` (left-right), ``a``
(anterior-posterior) and ``s`` (superior-inferior). Superior/inferior bands
split at the frame origin. The four sagittal body corners are searched on
the cross-section loop that contains the most anterior point, i.e. the
vertebral body outline, so posterior elements cannot capture them.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyIntersection, SchemeMismatch
from .frame import frontal_plane, sagittal_plane
from .intersect import plane_mesh_intersection

logger = logging.getLogger(__name__)

POI15 = (
    "sag_anterior_superior",
    "sag_anterior_inferior",
    "sag_posterior_extreme",
    "sag_superior_extreme",
    "sag_inferior_extreme",
    "sag_posterior_superior",
    "sag_posterior_inferior",
    "front_left_extreme",
    "front_right_extreme",
    "front_superior_left",
    "front_superior_right",
    "front_inferior_left",
    "front_inferior_right",
    "front_left_superior_process",
    "front_right_superior_process",
)
POI8 = (
    "sag_anterior_superior",
    "sag_anterior_inferior",
    "sag_posterior_superior",
    "sag_posterior_inferior",
    "front_superior_left",
    "front_superior_right",
    "front_inferior_left",
    "front_inferior_right",
)
SCHEMES = {"poi15": POI15, "poi8": POI8}

# extremal coordinates closer than this count as tied
TIE_TOL = 1e-9
# cut fragments closer than this (mm) are treated as one outline
BODY_GAP = 2.0
# depth (mm) of the superior / inferior rim searched for frontal body corners
RIM_BAND = 2.0


@dataclass(frozen=True)
class PoISet:
    scheme: str
    names: tuple
    points: np.ndarray

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise SchemeMismatch(f"unknown PoI scheme {self.scheme!r}")
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if len(pts) != len(self.names) or len(set(self.names)) != len(self.names):
            raise ValueError("PoI names must be unique and match the point count")
        unknown = set(self.names) - set(POI15)
        if unknown:
            raise ValueError(f"unknown PoI labels {sorted(unknown)}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name):
        return self.points[self.names.index(name)]

    def as_dict(self):
        return {name: self.points[i] for i, name in enumerate(self.names)}

    def to_json(self):
        return {
            "scheme": self.scheme,
            "points": [{"name": n, "xyz": [float(c) for c in p]} for n, p in zip(self.names, self.points)],
        }

    @classmethod
    def from_json(cls, data):
        pts = data["points"]
        return cls(data["scheme"], tuple(p["name"] for p in pts), [p["xyz"] for p in pts])

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


def _pick(values, candidates, label, largest=True):
    """Index of the extremal candidate; ties go to the lowest curve index."""
    idx = np.nonzero(candidates)[0]
    if len(idx) == 0:
        raise EmptyIntersection(f"no candidate points for {label}")
    x = values[idx] if largest else -values[idx]
    best = x.max()
    tied = idx[x >= best - TIE_TOL]
    if len(tied) > 1:
        logger.debug("%s: %d tied candidates, taking curve index %d", label, len(tied), tied.min())
    return int(tied.min())


def cross_sections(mesh, frame):
    return (plane_mesh_intersection(mesh, sagittal_plane(frame)),
            plane_mesh_intersection(mesh, frontal_plane(frame)))


def detect_pois(mesh, frame, scheme="poi15"):
    """Extract the named PoIs of ``scheme`` from the two anatomical cuts.

    Raises ``EmptyIntersection`` if a required cut misses the mesh or a
    band has no candidates.
    """
    if scheme not in SCHEMES:
        raise SchemeMismatch(f"unknown PoI scheme {scheme!r}")
    sag, front = cross_sections(mesh, frame)
    for name, curve in (("sagittal", sag), ("frontal", front)):
        if curve.is_empty:
            raise EmptyIntersection(f"{name} plane does not intersect the mesh")

    found = {}
    l, a, s = frame.local(sag.points).T
    every = np.ones(len(a), dtype=bool)
    anterior = _pick(a, every, "sagittal anterior")
    comp = sag.components(gap=BODY_GAP)
    body = comp == comp[anterior]
    up, down = s > 0, s < 0

    def body_band(band, label):
        sel = body & band
        if not sel.any():
            logger.warning("%s: body outline has no points in band, using whole cut", label)
            sel = band
        return sel

    # body corners are extremes along the diagonals, which stay well
    # defined where the walls and endplates are nearly flat
    found["sag_anterior_superior"] = _pick(a + s, body_band(up, "sag_anterior_superior"), "sag_anterior_superior")
    found["sag_anterior_inferior"] = _pick(a - s, body_band(down, "sag_anterior_inferior"), "sag_anterior_inferior")
    found["sag_posterior_extreme"] = _pick(a, every, "sag_posterior_extreme", largest=False)
    found["sag_superior_extreme"] = _pick(s, every, "sag_superior_extreme")
    found["sag_inferior_extreme"] = _pick(s, every, "sag_inferior_extreme", largest=False)
    found["sag_posterior_superior"] = _pick(s - a, body_band(up, "sag_posterior_superior"), "sag_posterior_superior")
    found["sag_posterior_inferior"] = _pick(-a - s, body_band(down, "sag_posterior_inferior"), "sag_posterior_inferior")
    sag_pts = {k: sag.points[i] for k, i in found.items()}

    l, a, s = frame.local(front.points).T
    every = np.ones(len(l), dtype=bool)
    left, right, up = l > 0, l < 0, s > 0
    radial = l * l + s * s
    def rim(side, top):
        # points of one side within RIM_BAND of its highest (lowest) point
        if not side.any():
            return side
        if top:
            return side & (s >= s[side].max() - RIM_BAND)
        return side & (s <= s[side].min() + RIM_BAND)

    picks = {
        "front_left_extreme": _pick(l, every, "front_left_extreme"),
        "front_right_extreme": _pick(l, every, "front_right_extreme", largest=False),
        "front_superior_left": _pick(l + s, rim(left, True), "front_superior_left"),
        "front_superior_right": _pick(s - l, rim(right, True), "front_superior_right"),
        "front_inferior_left": _pick(l - s, rim(left, False), "front_inferior_left"),
        "front_inferior_right": _pick(-l - s, rim(right, False), "front_inferior_right"),
        "front_left_superior_process": _pick(radial, left & up, "front_left_superior_process"),
        "front_right_superior_process": _pick(radial, right & up, "front_right_superior_process"),
    }
    front_pts = {k: front.points[i] for k, i in picks.items()}

    everything = {**sag_pts, **front_pts}
    names = SCHEMES[scheme]
    return PoISet(scheme, names, np.array([everything[n] for n in names]))
