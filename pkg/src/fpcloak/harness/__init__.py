from .config import ExperimentConfig, load_config
from .experiments import EXPERIMENTS, ExperimentReport, run_experiment, workbench
from .report import write_report

__all__ = ["EXPERIMENTS", "ExperimentConfig", "ExperimentReport", "load_config", "run_experiment", "workbench", "write_report"]
