"""Command-line drivers, configuration and reports."""

from .commands import COMMANDS, Context, Outcome, run_driver
from .config import ConfigError, ExperimentConfig, from_mapping, load_config
from .main import main, run_command
from .report import CONVERGENCE_HEADER, dumps, emit_report
