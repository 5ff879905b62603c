"""Simulation and analysis of a direct three-qubit parity measurement read out by homodyne detection."""

__version__ = "0.1.0"
