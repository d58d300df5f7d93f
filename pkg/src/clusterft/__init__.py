"""Simulation and verification tools for fault-tolerant cluster-state
quantum computation."""

__version__ = "0.1.0"
