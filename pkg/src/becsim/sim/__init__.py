"""
Monte Carlo harness over the protocol registry.
"""

from .export import (
    stats_to_csv,
    stats_to_json,
    sweep_to_csv,
    sweep_to_json,
    write_stats_json,
    write_sweep_csv,
    write_text,
)
from .runner import (
    SimConfig,
    SweepRow,
    TrialTask,
    random_grid,
    run_single_trial,
    run_trials,
    sweep,
    transcript_json,
    vary_grid,
)
from .stats import ComparisonReport, SimStats, TrialOutcome, compare_to_corner

__all__ = [
    "SimConfig",
    "SimStats",
    "SweepRow",
    "TrialOutcome",
    "TrialTask",
    "ComparisonReport",
    "compare_to_corner",
    "random_grid",
    "run_single_trial",
    "run_trials",
    "sweep",
    "transcript_json",
    "vary_grid",
    "stats_to_csv",
    "stats_to_json",
    "sweep_to_csv",
    "sweep_to_json",
    "write_stats_json",
    "write_sweep_csv",
    "write_text",
]
