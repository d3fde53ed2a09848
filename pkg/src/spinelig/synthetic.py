"""
Synthetic vertebra proxy with ground-truth ligament landmarks and PoIs.

The proxy is a union of closed, gridded box-like parts (not merged by a
boolean operation, so the surface is not a single manifold):

* body: elliptical cylinder with a waist, concave endplates and a slight
  anterior wedge, so the endplate rims are the outermost ridges;
* pedicles, lamina and four articular processes as boxes;
* two lateral fins (transverse processes) ending in a pointed tip;
* one posterior fin (spinous process) sloping caudally to a pointed tip.

World axes: +x left, +y anterior, +z superior, millimetres. Landmarks sit
on grid vertices along box edges and rims; PoI ground truth is computed
from the analytic shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .landmarks import Landmark, LandmarkSet
from .mesh import TriangleMesh
from .poi import POI15, SCHEMES, PoISet
from .registration import SimilarityTransform, quat_from_axis_angle

DEFORMATIONS = ("none", "noise", "endplate_fracture", "posterior_tilt")


@dataclass(frozen=True)
class Deformation:
    """``kind`` is one of none, noise (amount = sigma mm),
    endplate_fracture (amount = depth mm) or posterior_tilt (amount = degrees)."""

    kind: str = "none"
    amount: float = 0.0

    def __post_init__(self):
        if self.kind not in DEFORMATIONS:
            raise InvalidSpec(f"unknown deformation {self.kind!r}")
        if self.amount < 0 and self.kind != "posterior_tilt":
            raise InvalidSpec("deformation amount must be >= 0")


@dataclass(frozen=True)
class SyntheticSpec:
    body_lr: float = 26.0  # semi-axis
    body_ap: float = 19.0  # semi-axis
    body_height: float = 28.0
    body_waist: float = 0.06
    body_wedge: float = 4.0
    endplate_concavity: float = 1.0
    pedicle_width: float = 6.0
    pedicle_length: float = 9.0
    lamina_width: float = 32.0
    lamina_depth: float = 6.0
    lamina_height: float = 14.0
    fin_length: float = 36.0
    fin_depth: float = 9.0
    fin_height: float = 8.0
    fin_tip: float = 2.5
    spinous_length: float = 22.0
    spinous_width: float = 10.0
    spinous_height: float = 9.0
    spinous_drop: float = 9.0
    spinous_tip: float = 2.0
    facet_size: float = 9.0
    edge_length: float = 1.5
    deformation: Deformation = field(default_factory=Deformation)
    extra: tuple = ()  # further deformations applied after ``deformation``
    pose: SimilarityTransform = field(default_factory=SimilarityTransform)
    seed: int = 0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if isinstance(value, float) and name not in ("body_waist", "endplate_concavity", "body_wedge") and not value > 0:
                raise InvalidSpec(f"{name} must be positive")
        if not 0 <= self.body_waist < 0.5:
            raise InvalidSpec("body_waist must lie in [0, 0.5)")
        if self.endplate_concavity < 0 or self.body_wedge < 0:
            raise InvalidSpec("endplate_concavity and body_wedge must be >= 0")

    @property
    def deformations(self):
        return (self.deformation, *self.extra)


# ------------------------------------------------------------ part layout

class _Part:
    def __init__(self, name, fn, divisions, mirror=False, posterior=True):
        self.name = name
        self.fn = fn
        self.divisions = divisions
        self.mirror = mirror
        self.posterior = posterior

    def __call__(self, uvw):
        return self.fn(uvw[:, 0], uvw[:, 1], uvw[:, 2])


def _lerp(a, b, t):
    return a + (b - a) * (t + 1.0) / 2.0


def _divisions(extent, h):
    """Even division counts so that every part has a grid line at its mid-plane."""
    return tuple(max(2, 2 * int(np.ceil(e / (2 * h)))) for e in extent)


def _layout(spec, fin_y=None, lift=0.0):
    s = spec
    h = s.edge_length
    a, b, H = s.body_lr, s.body_ap, s.body_height

    def body(u, v, w):
        x = u * np.sqrt(1 - v * v / 2)
        y = v * np.sqrt(1 - u * u / 2)
        r = 1 - s.body_waist * (1 - w * w)
        half = H / 2 + s.body_wedge / 4 * y
        # zero on the side walls, where x^2 + y^2 == 1
        dip = s.endplate_concavity * (1 - x * x - y * y)
        z = w * half - np.sign(w) * dip
        return np.stack([a * r * x, b * r * y, z], axis=1)

    y_back = -b  # posterior body wall on the midline
    ped_in = 0.45 * a
    ped_y = (y_back + 3.0, y_back - s.pedicle_length)
    lam_y = (ped_y[1], ped_y[1] - s.lamina_depth)
    lam_z = (-s.lamina_height / 2, s.lamina_height / 2)

    def box(x, y, z):
        def fn(u, v, w):
            return np.stack([_lerp(x[0], x[1], u), _lerp(y[0], y[1], v), _lerp(z[0], z[1], w)], axis=1)
        return fn, _divisions([abs(x[1] - x[0]), abs(y[1] - y[0]), abs(z[1] - z[0])], h)

    def mirrored(fn):
        def m(u, v, w):
            p = fn(u, v, w)
            return p * np.array([-1.0, 1.0, 1.0])
        return m

    parts = [_Part("body", body, _divisions([2 * a * 0.75, 2 * b * 0.75, H], h), posterior=False)]

    ped = box((ped_in, ped_in + s.pedicle_width), ped_y[::-1], (-H / 4, H / 4))
    parts += [_Part("pedicle_left", *ped), _Part("pedicle_right", mirrored(ped[0]), ped[1], mirror=True)]

    half_w = s.lamina_width / 2
    lam = box((-half_w, half_w), lam_y[::-1], lam_z)
    parts.append(_Part("lamina", *lam))

    fin_root = ped_in + s.pedicle_width / 2
    fin_y = np.mean(ped_y) if fin_y is None else fin_y
    fin_z = (1.0, 1.0 + s.fin_height)

    def fin(u, v, w):
        x = _lerp(fin_root, fin_root + s.fin_length, u)
        x = x + s.fin_tip * (u + 1) / 2 * (1 - np.abs(v)) * (1 - np.abs(w))
        y = fin_y + v * s.fin_depth / 2
        z = _lerp(fin_z[0], fin_z[1], w)
        return np.stack([x, y, z], axis=1)

    fin_div = _divisions([s.fin_length, s.fin_depth, s.fin_height], h)
    parts += [_Part("fin_left", fin, fin_div), _Part("fin_right", mirrored(fin), fin_div, mirror=True)]

    sp_root = np.mean(lam_y)
    sp_z = (-s.spinous_height / 2 + lift, s.spinous_height / 2 + lift)

    def spinous(u, v, w):
        x = u * s.spinous_width / 2
        y = _lerp(sp_root, sp_root - s.spinous_length, v)
        y = y - s.spinous_tip * (v + 1) / 2 * (1 - np.abs(u)) * (1 - np.abs(w))
        z = _lerp(sp_z[0], sp_z[1], w) - s.spinous_drop * (v + 1) / 2
        return np.stack([x, y, z], axis=1)

    parts.append(_Part("spinous", spinous,
                       _divisions([s.spinous_width, s.spinous_length, s.spinous_height], h)))

    f = s.facet_size
    sup = box((half_w - f - 1, half_w - 1), (lam_y[0] + 2 - f, lam_y[0] + 2), (lam_z[1], lam_z[1] + f + 2))
    inf = box((half_w - f - 1, half_w - 1), (lam_y[1] + 1 - f, lam_y[1] + 1), (lam_z[0] - f - 2, lam_z[0]))
    parts += [
        _Part("facet_sup_left", *sup), _Part("facet_sup_right", mirrored(sup[0]), sup[1], mirror=True),
        _Part("facet_inf_left", *inf), _Part("facet_inf_right", mirrored(inf[0]), inf[1], mirror=True),
    ]
    geometry = {"fin_y": fin_y, "pivot": np.array([0.0, y_back, 0.0])}
    return parts, geometry


def _box_grid(nu, nv, nw):
    """Closed, outward-oriented triangulation of the surface of [-1, 1]^3.

    Returns the parameter coordinates of the surface nodes, the faces, and
    the integer grid coordinates of each node.
    """
    n = (nu, nv, nw)
    ijk = np.stack(np.meshgrid(*(np.arange(k + 1) for k in n), indexing="ij"), axis=-1).reshape(-1, 3)
    surface = np.any((ijk == 0) | (ijk == np.array(n)), axis=1)
    ijk = ijk[surface]
    lookup = -np.ones([k + 1 for k in n], dtype=np.int64)
    lookup[tuple(ijk.T)] = np.arange(len(ijk))
    faces = []
    for axis in range(3):
        a1, a2 = [k for k in range(3) if k != axis]
        for level, outward in ((0, -1.0), (n[axis], 1.0)):
            i, j = np.meshgrid(np.arange(n[a1]), np.arange(n[a2]), indexing="ij")
            i, j = i.ravel(), j.ravel()

            def node(di, dj):
                idx = np.zeros((len(i), 3), dtype=np.int64)
                idx[:, axis] = level
                idx[:, a1] = i + di
                idx[:, a2] = j + dj
                return lookup[tuple(idx.T)]

            p00, p10, p11, p01 = node(0, 0), node(1, 0), node(1, 1), node(0, 1)
            tris = np.concatenate([np.stack([p00, p10, p11], 1), np.stack([p00, p11, p01], 1)])
            # (a1, a2, axis) is right-handed for axis 0 and 2 only
            sign = outward * (1.0 if axis != 1 else -1.0)
            if sign < 0:
                tris = tris[:, ::-1]
            faces.append(tris)
    uvw = ijk / np.array(n, dtype=np.float64) * 2.0 - 1.0
    return uvw, np.concatenate(faces), ijk


def _snap(value, divisions):
    k = np.clip(np.rint((value + 1.0) / 2.0 * divisions), 0, divisions)
    return int(k)


# (part, (u, v, w), group, side); bundles are numbered per group in order
_LANDMARK_DEFS = (
    *[("body", (u, 1.0, w), "ALL") for w in (1.0, -1.0) for u in (-0.6, -0.3, 0.0, 0.3, 0.6)],
    *[("body", (u, -1.0, w), "PLL") for w in (1.0, -1.0) for u in (-0.35, -0.15, 0.15, 0.35)],
    *[(f, (1.0, v, w), "ITL") for f in ("fin_left", "fin_right") for w in (1.0, -1.0) for v in (-0.5, 0.5)],
    *[("spinous", (u, v, 1.0), "SSL") for u in (1.0, -1.0) for v in (0.5, 0.8)],
    *[("spinous", (u, v, w), "ISL") for u in (1.0, -1.0) for w in (1.0, -1.0) for v in (-0.1, 0.2)],
    # superior facets overhang the lateral part of the upper laminar margin
    *[("lamina", (u, 1.0, 1.0), "LF") for u in (-0.2, -0.12, -0.05, 0.05, 0.12, 0.2)],
    *[("lamina", (u, 1.0, -1.0), "LF") for u in (-0.55, -0.4, -0.2, 0.2, 0.4, 0.55)],
    # the medial posterior edge of a superior facet faces the spinous process
    *[(f, uvw, "CL") for f in ("facet_sup_left", "facet_sup_right")
      for uvw in ((-1.0, 1.0, 0.0), (1.0, 1.0, 0.0), (1.0, -1.0, 0.0), (-1.0, 1.0, 0.6))],
    *[(f, (u, v, 0.0), "CL") for f in ("facet_inf_left", "facet_inf_right")
      for u in (-1.0, 1.0) for v in (-1.0, 1.0)],
)


def _side(x, tol=1e-6):
    return "midline" if abs(x) < tol else ("left" if x > 0 else "right")


def _assemble(spec, fin_y=None, lift=0.0):
    parts, geometry = _layout(spec, fin_y, lift)
    verts, faces, owner, top_cap, nodes = [], [], [], [], {}
    offset = 0
    for k, part in enumerate(parts):
        uvw, tri, ijk = _box_grid(*part.divisions)
        p = part(uvw)
        if part.mirror:
            tri = tri[:, ::-1]
        verts.append(p)
        faces.append(tri + offset)
        owner.append(np.full(len(p), k))
        top_cap.append((uvw[:, 2] == 1.0) if part.name == "body" else np.zeros(len(p), dtype=bool))
        nodes[part.name] = (offset, {tuple(row): i + offset for i, row in enumerate(ijk)}, part)
        offset += len(p)
    return (parts, geometry, np.concatenate(verts), np.concatenate(faces),
            np.concatenate(owner), np.concatenate(top_cap), nodes)


def _landmark_vertices(nodes):
    out, counters = [], {}
    for part_name, uvw, group in _LANDMARK_DEFS:
        _, lookup, part = nodes[part_name]
        key = tuple(_snap(c, d) for c, d in zip(uvw, part.divisions))
        out.append((lookup[key], group, counters.get(group, 0)))
        counters[group] = counters.get(group, 0) + 1
    return out


def _deform(points, owner_posterior, top_cap, deformation, spec, geometry):
    kind, amount = deformation.kind, deformation.amount
    p = points.copy()
    if kind == "endplate_fracture" and amount > 0:
        # anterior-central depression of the superior endplate
        x = p[:, 0] / spec.body_lr
        y = p[:, 1] / spec.body_ap - 0.35
        bump = np.clip(1.0 - (x * x + y * y) / 0.8 ** 2, 0.0, 1.0)
        p[:, 2] -= np.where(top_cap, amount * bump, 0.0)
    elif kind == "posterior_tilt" and amount != 0:
        t = np.radians(amount)
        c, s = np.cos(t), np.sin(t)
        rel = p - geometry["pivot"]
        rot = rel.copy()
        rot[:, 1] = c * rel[:, 1] - s * rel[:, 2]
        rot[:, 2] = s * rel[:, 1] + c * rel[:, 2]
        p = np.where(owner_posterior[:, None], rot + geometry["pivot"], p)
    return p


def _poi_truth(spec, geometry, nodes, centroid):
    """Analytic PoI positions of the undeformed proxy, in world coordinates.

    Cut planes pass through ``centroid`` along the world axes. Returns
    ``{label: (position, part name)}``; the superior and inferior extremes
    map to ``("max" | "min", candidates)`` instead.
    """
    body = nodes["body"][2]
    fin = nodes["fin_left"][2]
    spin = nodes["spinous"][2]

    def at(part, u, v, w):
        return part(np.array([[u, v, w]], dtype=np.float64))[0], part.name

    yb = centroid[1] / spec.body_ap
    xb = np.sqrt(max(0.0, 1.0 - yb * yb))
    half = spec.body_height / 2 + spec.body_wedge / 4 * yb
    rim = {
        (sx, sz): (np.array([sx * spec.body_lr * xb, centroid[1], sz * half]), "body")
        for sx in (1, -1) for sz in (1, -1)
    }
    v_fin = (centroid[1] - geometry["fin_y"]) / (spec.fin_depth / 2)
    tip, _ = at(fin, 1.0, v_fin, 0.0)
    left_tip = (tip, "fin_left")
    right_tip = (tip * np.array([-1.0, 1.0, 1.0]), "fin_right")
    # outline corners that can be the highest / lowest point of the sagittal cut
    upper = [at(body, 0.0, 1.0, 1.0), at(body, 0.0, -1.0, 1.0), at(spin, 0.0, -1.0, 1.0)]
    lower = [at(body, 0.0, 1.0, -1.0), at(body, 0.0, -1.0, -1.0), at(spin, 0.0, 1.0, -1.0)]
    return {
        "sag_anterior_superior": at(body, 0.0, 1.0, 1.0),
        "sag_anterior_inferior": at(body, 0.0, 1.0, -1.0),
        "sag_posterior_extreme": at(spin, 0.0, 1.0, 0.0),
        # resolved after deformation, which can change the winner
        "sag_superior_extreme": ("max", upper),
        "sag_inferior_extreme": ("min", lower),
        "sag_posterior_superior": at(body, 0.0, -1.0, 1.0),
        "sag_posterior_inferior": at(body, 0.0, -1.0, -1.0),
        "front_left_extreme": left_tip,
        "front_right_extreme": right_tip,
        "front_superior_left": rim[(1, 1)],
        "front_superior_right": rim[(-1, 1)],
        "front_inferior_left": rim[(1, -1)],
        "front_inferior_right": rim[(-1, -1)],
        "front_left_superior_process": left_tip,
        "front_right_superior_process": right_tip,
    }


@dataclass(frozen=True, eq=False)
class SyntheticVertebra:
    mesh: TriangleMesh
    landmarks: LandmarkSet
    pois: dict  # scheme -> PoISet
    spec: SyntheticSpec


def gen_synthetic(spec=None, scheme="poi15"):
    """Generate a proxy vertebra, its 66 landmarks and its PoI ground truth.

    Deterministic for a fixed ``spec`` (including ``seed``). Deformations are
    applied to mesh, landmarks and PoIs alike, except vertex noise, which
    only perturbs the mesh; the pose is applied last.

    Returns
    -------
    mesh : TriangleMesh
    landmarks : LandmarkSet
    pois : PoISet
    """
    v = gen_vertebra(spec)
    return v.mesh, v.landmarks, v.pois[scheme]


def _ap_si_covariance(verts):
    x = verts - verts.mean(axis=0)
    return float(x[:, 1] @ x[:, 2]) / len(x)


def _balance(spec):
    """Fin AP position and spinous height offset for an axis-aligned proxy.

    The fins are centred on the frontal plane through the vertex centroid,
    and the spinous process is raised or lowered until the AP/SI vertex
    covariance vanishes, so the principal axes coincide with the world axes.
    """
    fin_y, lift = None, 0.0
    for _ in range(6):
        verts = _assemble(spec, fin_y, lift)[2]
        fin_y = verts[:, 1].mean()
        c0 = _ap_si_covariance(verts)
        c1 = _ap_si_covariance(_assemble(spec, fin_y, lift + 1.0)[2])
        if c1 == c0:
            break
        lift -= c0 / (c1 - c0)
    return fin_y, lift


def gen_vertebra(spec=None):
    """Like ``gen_synthetic`` but returns all PoI schemes in one record."""
    spec = SyntheticSpec() if spec is None else spec
    fin_y, lift = _balance(spec)
    parts, geometry, clean, faces, owner, top_cap, nodes = _assemble(spec, fin_y, lift)
    centroid = clean.mean(axis=0)
    posterior = np.array([p.posterior for p in parts])[owner]

    lm_defs = _landmark_vertices(nodes)
    lm_idx = np.array([i for i, _, _ in lm_defs])
    sides = [_side(x) for x in clean[lm_idx, 0]]

    truth = _poi_truth(spec, geometry, nodes, centroid)
    # flatten PoI candidates so deformations treat them like any other point
    cand_names, cand = [], []
    for n in POI15:
        entries = truth[n][1] if isinstance(truth[n][0], str) else [truth[n]]
        cand_names += [n] * len(entries)
        cand += entries
    poi_pts = np.array([c[0] for c in cand])
    poi_posterior = np.array([c[1] != "body" for c in cand])
    poi_top = np.array([c[1] == "body" and c[0][2] > 0 for c in cand])

    rng = np.random.default_rng(spec.seed)
    noise = np.zeros_like(clean)
    for d in spec.deformations:
        if d.kind == "noise":
            noise += rng.normal(0.0, d.amount, size=clean.shape)
        else:
            clean = _deform(clean, posterior, top_cap, d, spec, geometry)
            poi_pts = _deform(poi_pts, poi_posterior, poi_top, d, spec, geometry)

    pose = spec.pose
    mesh = TriangleMesh(pose.apply(clean + noise), faces, {"source": "synthetic", "seed": spec.seed})
    # landmarks sit on the noise-free surface
    lm_pts = pose.apply(clean[lm_idx])
    landmarks = LandmarkSet(
        Landmark(group, bundle, side, p, "annotated")
        for (_, group, bundle), side, p in zip(lm_defs, sides, lm_pts)
    )
    picked = []
    for n in POI15:
        rows = [i for i, m in enumerate(cand_names) if m == n]
        if len(rows) > 1:
            z = poi_pts[rows, 2]
            rows = [rows[int(np.argmax(z) if truth[n][0] == "max" else np.argmin(z))]]
        picked.append(poi_pts[rows[0]])
    poi_world = pose.apply(np.array(picked))
    pois = {name: PoISet(name, names, np.array([poi_world[POI15.index(n)] for n in names]))
            for name, names in SCHEMES.items()}
    return SyntheticVertebra(mesh, landmarks, pois, spec)


# Benchmark suites: each seed gives one target posed by a random similarity.
SUITES = {
    "default": (Deformation("noise", 0.5),),
    "fracture": (Deformation("endplate_fracture", 3.0), Deformation("noise", 0.5)),
    "posterior": (Deformation("posterior_tilt", 15.0), Deformation("noise", 0.5)),
}


def random_pose(rng, scale=(0.9, 1.1), shift=50.0):
    """Random rotation, translation in ``[-shift, shift]`` mm and scale in ``scale``."""
    q = quat_from_axis_angle(rng.normal(size=3), rng.uniform(0.0, np.pi))
    return SimilarityTransform(q, rng.uniform(-shift, shift, 3), rng.uniform(*scale))


def suite_target(suite, seed, **spec_fields):
    """Target vertebra for instance ``seed`` of a benchmark suite."""
    if suite not in SUITES:
        raise InvalidSpec(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    first, *rest = SUITES[suite]
    pose = random_pose(np.random.default_rng([seed, 7919]))
    spec = SyntheticSpec(deformation=first, extra=tuple(rest), pose=pose, seed=seed, **spec_fields)
    return gen_vertebra(spec)
