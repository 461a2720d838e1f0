"""Scenario configuration, episode engine, sweeps, export and CLI."""

from .config import ScenarioConfig, apply_overrides, load_config, parse_config
from .engine import RunResult, build_geometry, episode_streams, run_episode
from .export import COLUMNS, export_results
from .pingpong import PingPongTrace, inject_pingpong
from .sweep import AXES, SweepPoint, SweepSpec, apply_axis, run_sweep

__all__ = ["ScenarioConfig", "apply_overrides", "load_config", "parse_config", "RunResult",
           "build_geometry", "episode_streams", "run_episode", "COLUMNS", "export_results",
           "PingPongTrace", "inject_pingpong", "AXES", "SweepPoint", "SweepSpec", "apply_axis",
           "run_sweep"]
