"""Ising ferromagnets with random boundary conditions: exact solvers, samplers and experiments."""

__version__ = "0.1.0"
