"""Experiment orchestration: inputs, width schedules, sweeps, CSV output and the CLI."""

from ntklab.harness.config import SweepConfig, load_config
from ntklab.harness.csvout import read_csv, write_csv
from ntklab.harness.experiments import (
    SweepResult,
    run,
    run_dispersion_sweep,
    run_gd_step_experiment,
    run_nondiag_sweep,
    run_structure_experiment,
    run_theory_eval,
)
from ntklab.harness.inputs import WidthSchedule, gen_pair_with_cosine, gen_unit_input, width_schedule

__all__ = [
    "SweepConfig", "SweepResult", "WidthSchedule", "gen_pair_with_cosine", "gen_unit_input",
    "load_config", "run", "run_dispersion_sweep", "run_gd_step_experiment", "run_nondiag_sweep",
    "read_csv", "run_structure_experiment", "run_theory_eval", "width_schedule", "write_csv",
]
