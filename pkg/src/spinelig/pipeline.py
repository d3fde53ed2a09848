"""End-to-end landmark transfer from an annotated atlas to a target mesh."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

from .config import PipelineConfig
from .edges import compute_edge_values
from .errors import SpineLigError, StageError
from .frame import compute_frame
from .poi import detect_pois
from .projection import project_landmarks
from .registration import horn_align, match_by_name

STAGES = ("frames", "pois", "match", "register", "apply", "edges", "project")


@dataclass
class PipelineResult:
    landmarks: object
    registered: object
    transform: object
    atlas_frame: object
    target_frame: object
    atlas_pois: object
    target_pois: object
    edges: object
    stage_s: dict
    total_s: float = 0.0  # wall clock of the whole run, measured independently of the stages

    @property
    def runtime_s(self):
        return self.total_s

    def summary(self, timings=True):
        out = {"transform": self.transform.to_json(),
               "fallbacks": sum(s == "fallback_nearest_vertex" for s in self.landmarks.statuses)}
        if timings:
            out.update(runtime_s=self.runtime_s, stage_s=dict(self.stage_s))
        return out

    def to_json(self, timings=True):
        """Landmarks plus summary; without timings the output is reproducible byte for byte."""
        return {**self.landmarks.to_json(), **self.summary(timings)}


@contextmanager
def _stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (SpineLigError, ValueError, ArithmeticError, RuntimeError) as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def run_pipeline(atlas_mesh, atlas_landmarks, target_mesh, config=None):
    """Transfer ``atlas_landmarks`` onto ``target_mesh``.

    Timings are wall-clock per stage and exclude file I/O. Any failure is
    re-raised as ``StageError`` naming the stage.
    """
    config = PipelineConfig() if config is None else config
    t = {}
    t0 = time.perf_counter()
    with _stage("frames", t):
        fa = compute_frame(atlas_mesh, config.hints)
        ft = compute_frame(target_mesh, config.hints)
    with _stage("pois", t):
        pa = detect_pois(atlas_mesh, fa, config.poi_scheme)
        pt = detect_pois(target_mesh, ft, config.poi_scheme)
    with _stage("match", t):
        corr = match_by_name(pa, pt)
    with _stage("register", t):
        xf = horn_align(corr, with_scale=config.with_scale)
    with _stage("apply", t):
        registered = atlas_landmarks.with_positions(xf.apply(atlas_landmarks.positions), "registered")
    with _stage("edges", t):
        edges = compute_edge_values(target_mesh, radius=config.edge_radius)
    with _stage("project", t):
        final = project_landmarks(target_mesh, ft, edges, registered, config.rules)
    return PipelineResult(final, registered, xf, fa, ft, pa, pt, edges, t, time.perf_counter() - t0)
