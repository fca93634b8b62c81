"""orchard: closed-loop UAV fruit-counting simulator.

Synthetic warehouse scenes with exact ground truth, a software
renderer, a classical color/depth detection pipeline, two-sided route
planning, and a scoring/mission harness that ties them together.
"""

from .config import (AppConfig, Bounds, CameraConfig, ColorProfile,
                     ConfigError, DetectorParams, LayoutConfig, PLANT_TYPES,
                     PlannerConfig, ScoringConfig, config_from_dict,
                     load_config, save_config)
from .scene import (CameraModel, Frame, SceneSpec, capture_frame,
                    capture_pose, generate_scene, ground_truth_count,
                    load_scene, render_frame, save_scene)
from .detector import BedObservation, FruitDetection, analyze_frame, annotate
from .fusion import BedCount, merge_bed_sides
from .planner import (FlightResult, PlanningError, Route, Trajectory,
                      Waypoint, build_waypoints, chebyshev_fractions,
                      chebyshev_path, cost_matrix, plan_mission, plan_route,
                      simulate_flight, solve_route, time_parameterize)
from .scorer import ScoreInputs, ScoreReport, compute_score
from .harness import (BatchSummary, Mission, MissionParseError,
                      MissionReport, batch_reports, best_k_mean,
                      format_mission, parse_mission, random_mission,
                      run_batch, run_mission, summarize)

__version__ = "0.1.0"

__all__ = [
    "AppConfig", "Bounds", "CameraConfig", "ColorProfile", "ConfigError",
    "DetectorParams", "LayoutConfig", "PLANT_TYPES", "PlannerConfig",
    "ScoringConfig", "config_from_dict", "load_config", "save_config",
    "CameraModel", "Frame", "SceneSpec", "capture_frame", "capture_pose",
    "generate_scene", "ground_truth_count", "load_scene", "render_frame",
    "save_scene",
    "BedObservation", "FruitDetection", "analyze_frame", "annotate",
    "BedCount", "merge_bed_sides",
    "FlightResult", "PlanningError", "Route", "Trajectory", "Waypoint",
    "build_waypoints", "chebyshev_fractions", "chebyshev_path",
    "cost_matrix", "plan_mission", "plan_route", "simulate_flight",
    "solve_route", "time_parameterize",
    "ScoreInputs", "ScoreReport", "compute_score",
    "BatchSummary", "Mission", "MissionParseError", "MissionReport",
    "batch_reports", "best_k_mean", "format_mission", "parse_mission",
    "random_mission", "run_batch", "run_mission", "summarize",
]
