"""Numerical workbench for Dirac boundary-value problems on the unit disk."""

__version__ = "0.1.0"
