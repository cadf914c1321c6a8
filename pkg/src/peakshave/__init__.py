"""Distributed peak minimization over networks of agents with polytope constraints."""

__version__ = "0.1.0"
