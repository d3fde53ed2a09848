"""
Vertebra-local anatomical frame and the cutting planes derived from it.

The frame comes from a principal component analysis of the vertex set:
left-right is the direction of largest spread (transverse processes),
anterior-posterior the second, superior-inferior the smallest. Signs are
fixed by two shape rules so the result is deterministic and follows rigid
motions of the input:

* anterior points toward the bulkier end along the AP axis (the vertebral
  body holds more vertices than the posterior processes);
* superior is chosen so the posterior-most quarter of the vertices (the
  spinous process) sits below the origin, since it slopes caudally.

Left-right then completes a right-handed triad.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry
from .linalg import jacobi_eigh

ISOTROPY_GAP = 1e-6
AP_QUARTER = 0.25


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class CuttingPlane:
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))
        object.__setattr__(self, "normal", _unit(self.normal))

    def signed_distance(self, points):
        return (np.asarray(points) - self.point) @ self.normal


@dataclass(frozen=True)
class AnatomicalFrame:
    origin: np.ndarray
    axis_ap: np.ndarray
    axis_lr: np.ndarray
    axis_si: np.ndarray

    def __post_init__(self):
        for name in ("origin", "axis_ap", "axis_lr", "axis_si"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @property
    def basis(self):
        """Rows are (lr, ap, si)."""
        return np.stack([self.axis_lr, self.axis_ap, self.axis_si])

    def axis(self, name):
        return {"LR": self.axis_lr, "AP": self.axis_ap, "SI": self.axis_si}[name.upper()]

    def local(self, points):
        """Frame coordinates of ``points`` as (n, 3) columns ``(l, a, s)``."""
        return (np.asarray(points, dtype=np.float64) - self.origin) @ self.basis.T

    def transformed(self, rotation, translation=(0.0, 0.0, 0.0)):
        r = np.asarray(rotation, dtype=np.float64)
        return AnatomicalFrame(
            origin=r @ self.origin + np.asarray(translation, dtype=np.float64),
            axis_ap=r @ self.axis_ap,
            axis_lr=r @ self.axis_lr,
            axis_si=r @ self.axis_si,
        )

    def is_valid(self, tol=1e-9):
        b = self.basis
        return (
            np.allclose(np.linalg.norm(b, axis=1), 1.0, atol=tol)
            and np.allclose(b @ b.T - np.diag(np.diag(b @ b.T)), 0.0, atol=tol)
            and float(np.cross(self.axis_lr, self.axis_ap) @ self.axis_si) > 0
        )


def sagittal_plane(frame):
    return CuttingPlane(frame.origin, frame.axis_lr)


def frontal_plane(frame):
    return CuttingPlane(frame.origin, frame.axis_ap)


def transverse_plane(frame):
    return CuttingPlane(frame.origin, frame.axis_si)


def snap_to_rotation(axes):
    """Nearest right-handed orthonormal triad to three approximate row vectors."""
    h = np.asarray(axes, dtype=np.float64).reshape(3, 3)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(u @ vt)) or 1.0
    return u @ np.diag([1.0, 1.0, d]) @ vt


def _triad(ap, si):
    ap = _unit(ap)
    si = _unit(si - (si @ ap) * ap)
    lr = np.cross(ap, si)
    return lr, ap, si


def compute_frame(mesh, hints=None):
    """PCA-based anatomical frame of a vertebra mesh.

    Parameters
    ----------
    mesh : TriangleMesh
    hints : (3, 3) array_like, optional
        Approximate ``(lr, ap, si)`` axis vectors as rows. They are snapped
        to the nearest rotation and then decide both axis ordering and sign.

    Raises
    ------
    DegenerateGeometry
        If the vertices are (nearly) coplanar, or the covariance is isotropic
        enough that principal directions are undefined and no hints are given.
    """
    pts = np.asarray(mesh.vertices, dtype=np.float64)
    if len(pts) < 4:
        raise DegenerateGeometry("need at least 4 vertices")
    origin = pts.mean(axis=0)
    x = pts - origin
    cov = (x.T @ x) / len(x)
    values, vectors = jacobi_eigh(cov, tol=1e-15)
    if values[2] <= 1e-12 * values[0]:
        raise DegenerateGeometry("vertex set is coplanar or collinear")
    gaps = -np.diff(values) / values[0]
    isotropic = bool(np.any(gaps < ISOTROPY_GAP))

    if hints is not None:
        h = snap_to_rotation(hints)
        if isotropic:
            lr, ap, si = h
        else:
            # assign principal directions to hint axes, best total alignment
            dots = np.abs(h @ vectors)  # [hint axis, eigenvector]
            best = max(itertools.permutations(range(3)),
                       key=lambda p: sum(dots[i, p[i]] for i in range(3)))
            axes = [vectors[:, best[i]] * np.sign(h[i] @ vectors[:, best[i]] or 1.0)
                    for i in range(3)]
            lr, ap, si = _triad(axes[1], axes[2])
        return AnatomicalFrame(origin, ap, lr, si)

    if isotropic:
        raise DegenerateGeometry(
            "principal axes are not unique (isotropic vertex spread); supply orientation hints"
        )

    ap = vectors[:, 1].copy()
    si = vectors[:, 2].copy()
    a = x @ ap
    lo, hi = a.min(), a.max()
    band = AP_QUARTER * (hi - lo)
    if np.count_nonzero(a <= lo + band) > np.count_nonzero(a >= hi - band):
        ap, a = -ap, -a
        lo, hi = -hi, -lo
    posterior = a <= lo + band
    if (x[posterior] @ si).mean() > 0:
        si = -si
    lr, ap, si = _triad(ap, si)
    return AnatomicalFrame(origin, ap, lr, si)
