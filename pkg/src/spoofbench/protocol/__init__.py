from .experiment import (DEFAULT_EXPERIMENT, ExperimentPlan, ExperimentRunner, PlanError,
                         run_experiment)
from .manifest import AttackLabel, Entry, Manifest, ManifestError, parse_manifest, write_manifest
from .masks import TrainMask, TrainingConfigError, select_training
from .table import ResultRow, ResultTable, emit_table, render_table

__all__ = [
    "DEFAULT_EXPERIMENT", "ExperimentPlan", "ExperimentRunner", "PlanError", "run_experiment",
    "AttackLabel", "Entry", "Manifest", "ManifestError", "parse_manifest", "write_manifest",
    "TrainMask", "TrainingConfigError", "select_training",
    "ResultRow", "ResultTable", "emit_table", "render_table",
]
