"""
Fixed-step integration of the Master Equations.
"""

from .integrator import (IntegrationError, InvalidInitialState, RelaxationReport, StepTooLarge,
                         Trajectory, integrate, relax_to_steady)

__all__ = [
    'integrate',
    'relax_to_steady',
    'Trajectory',
    'RelaxationReport',
    'IntegrationError',
    'StepTooLarge',
    'InvalidInitialState',
]
