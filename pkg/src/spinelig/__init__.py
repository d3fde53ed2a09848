"""Transfer spinal-ligament attachment landmarks from an atlas vertebra to a patient mesh."""
from .config import PipelineConfig, load_config, parse_config
from .edges import EdgeField, compute_edge_values
from .errors import SpineLigError, StageError
from .evaluation import EvaluationReport, evaluate
from .frame import AnatomicalFrame, CuttingPlane, compute_frame
from .intersect import IntersectionCurve, plane_mesh_intersection
from .landmarks import Landmark, LandmarkSet, LigamentGroup, landmark_group_stats
from .mesh import SpatialIndex, TriangleMesh, compute_stats, load_mesh, save_mesh
from .pipeline import PipelineResult, run_pipeline
from .poi import POI8, POI15, PoISet, detect_pois
from .projection import ProjectionRule, default_rules, project_landmarks
from .registration import CorrespondenceSet, SimilarityTransform, horn_align, match_by_name
from .synthetic import Deformation, SyntheticSpec, gen_synthetic, gen_vertebra

__all__ = [
    "AnatomicalFrame", "CorrespondenceSet", "CuttingPlane", "Deformation", "EdgeField",
    "EvaluationReport", "IntersectionCurve", "Landmark", "LandmarkSet", "LigamentGroup",
    "POI8", "POI15", "PipelineConfig", "PipelineResult", "PoISet", "ProjectionRule",
    "SimilarityTransform", "SpatialIndex", "SpineLigError", "StageError", "SyntheticSpec",
    "TriangleMesh", "compute_edge_values", "compute_frame", "compute_stats", "default_rules",
    "detect_pois", "evaluate", "gen_synthetic", "gen_vertebra", "horn_align", "landmark_group_stats",
    "load_config", "load_mesh", "match_by_name", "parse_config", "plane_mesh_intersection",
    "project_landmarks", "run_pipeline", "save_mesh",
]
