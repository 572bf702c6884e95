"""Simulation of the repeat-until-success CZ gate between photon-source qubits."""

__version__ = "0.1.0"
