"""
Logging helpers shared by the packages and the command line.
"""

from .logging_config import level_from_flags, setup_logging

__all__ = ['setup_logging', 'level_from_flags']
