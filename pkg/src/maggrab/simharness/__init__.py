from maggrab.simharness.config import (
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    default_config,
    default_config_dict,
    load_config,
    repeatability_config,
    repeatability_config_dict,
)
from maggrab.simharness.harness import (
    LOG_HEADER,
    CycleRecord,
    TrajectoryLog,
    estimate_fusion,
    localize_window_pair,
    observe,
    replay_log,
    run_all,
    run_closed_loop,
    sensor_world_poses,
)
from maggrab.simharness.report import RunReport, RunSummary, aggregate, compute_report

__all__ = [
    "CycleRecord",
    "LOG_HEADER",
    "RunReport",
    "RunSummary",
    "ScenarioConfig",
    "TrajectoryLog",
    "aggregate",
    "compute_report",
    "config_from_dict",
    "config_to_dict",
    "default_config",
    "default_config_dict",
    "estimate_fusion",
    "localize_window_pair",
    "load_config",
    "observe",
    "repeatability_config",
    "repeatability_config_dict",
    "replay_log",
    "run_all",
    "run_closed_loop",
    "sensor_world_poses",
]
