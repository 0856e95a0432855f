"""Finite-scale experiments with fat bigons, divergence and hyperbolicity in Cayley graphs."""

__version__ = "0.1.0"
