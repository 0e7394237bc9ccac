"""
OTC Market Steady States

Mean-field dynamics, steady-state solvers and finite-population simulation
of over-the-counter markets with search frictions.
"""

__version__ = "0.1.0"
