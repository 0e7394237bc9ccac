"""
Poincare-Miranda zero localization on axis-aligned boxes.
"""

from .box import Box
from .engine import (EpsOutOfRange, FaceCertificate, LostTrack, NotCertified, RefinementResult,
                     SubdivisionError, check_faces, iterations_needed, refine)

__all__ = [
    'Box',
    'FaceCertificate',
    'RefinementResult',
    'check_faces',
    'refine',
    'iterations_needed',
    'SubdivisionError',
    'NotCertified',
    'LostTrack',
    'EpsOutOfRange',
]
