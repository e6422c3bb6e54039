"""Simulation toolkit for two Kerr-cat qubits coupled through two transmon couplers."""

__version__ = "0.1.0"
