"""Nonlocal heat conduction on the half-space: wall-flux Volterra solvers."""

__version__ = "0.1.0"
