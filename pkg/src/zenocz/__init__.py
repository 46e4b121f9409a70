"""Simulator for the Zeno-effect (interaction-free) Rydberg-mediated CZ gate on dual-rail photons."""

__version__ = "0.1.0"
