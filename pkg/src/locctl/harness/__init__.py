"""Scenario configs, runs, CSV output and the acceptance suite."""
from .config import ConfigError, ScenarioConfig, rng_for
from .runner import OUT_DIR_ENV, RunRecord, run_all, run_scenario
from .scenarios import list_scenarios, preset

__all__ = ["ConfigError", "ScenarioConfig", "rng_for", "OUT_DIR_ENV", "RunRecord", "run_all", "run_scenario",
           "list_scenarios", "preset"]
