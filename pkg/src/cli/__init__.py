"""
Command-line layer: run configuration, result writers, verification suite
and the otc-steady entry point.
"""

from .commands import COMMANDS, cmd_integrate, cmd_simulate, cmd_steady, cmd_verify
from .config import (ConfigError, RunConfig, apply_overrides, config_from_dict, config_to_dict,
                     initial_distribution, load_config, save_config, solver_options)
from .main import main
from .verification import CheckResult, VerificationSummary, run_verification
from .writers import atomic_write, read_json, read_table, steady_report, write_json, write_table

__all__ = [
    'main',
    'COMMANDS',
    'cmd_integrate',
    'cmd_steady',
    'cmd_simulate',
    'cmd_verify',
    'RunConfig',
    'ConfigError',
    'load_config',
    'save_config',
    'config_from_dict',
    'config_to_dict',
    'apply_overrides',
    'initial_distribution',
    'solver_options',
    'CheckResult',
    'VerificationSummary',
    'run_verification',
    'atomic_write',
    'write_json',
    'read_json',
    'write_table',
    'read_table',
    'steady_report',
]
