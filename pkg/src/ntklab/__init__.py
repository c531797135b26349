"""Finite-width neural tangent kernel laboratory for deep ReLU networks."""

__version__ = "0.1.0"
