"""Bayesian particle swarm optimization and benchmark harness."""

__version__ = "1.0.0"
