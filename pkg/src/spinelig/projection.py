"""
Snap registered landmarks onto ridges of the target surface.

Each landmark gets a cutting plane whose normal is one of the frame axes
(per ligament group). Among cross-section points within the search radius
of the landmark, the one with the highest interpolated edge value wins. If
the cut never comes within the radius, the landmark falls back to the
nearest mesh vertex and is flagged as such.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyMesh, MissingRule
from .frame import CuttingPlane
from .intersect import plane_mesh_intersection
from .landmarks import LandmarkSet, LigamentGroup, landmark_group_stats
from .mesh import within_radius

PLANE_MODES = ("group", "side", "bundle")
DEFAULT_SEARCH_RADIUS = 5.0
VALUE_TIE = 1e-12


@dataclass(frozen=True)
class ProjectionRule:
    """How one ligament group is projected.

    ``plane_mode`` selects the point the cutting plane passes through: the
    group centroid, the centroid of the group's landmarks on the same side,
    or each landmark itself.
    """

    group: LigamentGroup
    plane_axis: str = "SI"
    search_radius: float = DEFAULT_SEARCH_RADIUS
    plane_mode: str = "bundle"

    def __post_init__(self):
        object.__setattr__(self, "group", LigamentGroup(self.group))
        axis = self.plane_axis.upper()
        if axis not in ("AP", "LR", "SI"):
            raise ValueError(f"plane_axis must be AP, LR or SI, got {self.plane_axis!r}")
        object.__setattr__(self, "plane_axis", axis)
        if not self.search_radius > 0:
            raise ValueError("search_radius must be positive")
        if self.plane_mode not in PLANE_MODES:
            raise ValueError(f"plane_mode must be one of {PLANE_MODES}")

    @property
    def per_bundle_plane(self):
        return self.plane_mode == "bundle"


# The cut for every group runs across the ridge its landmarks sit on.
DEFAULT_AXES = {
    "ALL": "LR",  # endplate rims run left-right across the anterior wall
    "PLL": "LR",
    "ITL": "AP",  # transverse-process tip edges run antero-posteriorly
    "SSL": "AP",
    "ISL": "AP",
    "LF": "LR",  # laminar margins run left-right
    "CL": "SI",  # facet capsule landmarks sit on vertical process edges
}


def default_rules(search_radius=DEFAULT_SEARCH_RADIUS):
    return {g: ProjectionRule(g, DEFAULT_AXES[g.value], search_radius, "bundle") for g in LigamentGroup}


def select_candidate(points, values, target, radius):
    """Curve index with the highest value within ``radius`` of ``target``, or None.

    Values within 1e-12 of the best tie; ties resolve to the point nearest
    ``target``, then to the lowest curve index.
    """
    inside = np.nonzero(within_radius(points, target, radius))[0]
    if len(inside) == 0:
        return None
    v = values[inside]
    tied = inside[v >= v.max() - VALUE_TIE]
    d = points[tied] - target
    d2 = np.einsum("ij,ij->i", d, d)
    return int(tied[np.lexsort((tied, d2))[0]])


def project_landmarks(mesh, frame, edges, landmarks, rules=None):
    """Project every landmark onto the mesh; returns a new ``LandmarkSet``.

    Output statuses are ``projected`` or ``fallback_nearest_vertex``.
    """
    if mesh.n_faces == 0 or mesh.n_vertices == 0:
        raise EmptyMesh("cannot project onto an empty mesh")
    rules = default_rules() if rules is None else rules
    rules = {LigamentGroup(k): v for k, v in rules.items()}
    for e in landmarks:
        if e.group not in rules:
            raise MissingRule(e.group.value)

    by_group, by_side = landmark_group_stats(landmarks)
    cache = {}
    out = []
    for e in landmarks:
        rule = rules[e.group]
        if rule.plane_mode == "group":
            point = by_group[e.group.value]
        elif rule.plane_mode == "side":
            point = by_side[(e.group.value, e.side)]
        else:
            point = e.position
        normal = frame.axis(rule.plane_axis)
        key = (rule.plane_axis, *np.round(point, 12))
        if key not in cache:
            cache[key] = plane_mesh_intersection(mesh, CuttingPlane(point, normal), edges.values)
        curve = cache[key]

        best = None
        if not curve.is_empty:
            best = select_candidate(curve.points, curve.values, e.position, rule.search_radius)
        if best is None:
            pos = mesh.vertices[mesh.index.nearest(e.position)]
            out.append(replace(e, position=pos.copy(), status="fallback_nearest_vertex"))
        else:
            out.append(replace(e, position=curve.points[best].copy(), status="projected"))
    return LandmarkSet(out)
