from .config import GOAL_RADIUS, ObstacleSpec, RobotSpec, SampleSpec, ScenarioConfig
from .reports import benchmark_timing, compare, consistency_report, run_matrix, write_csv
from .runner import StepRecord, TrajectoryLog, estimate_eta, run_scenario

__all__ = [
    "GOAL_RADIUS",
    "ObstacleSpec",
    "RobotSpec",
    "SampleSpec",
    "ScenarioConfig",
    "StepRecord",
    "TrajectoryLog",
    "benchmark_timing",
    "compare",
    "consistency_report",
    "estimate_eta",
    "run_matrix",
    "run_scenario",
    "write_csv",
]
