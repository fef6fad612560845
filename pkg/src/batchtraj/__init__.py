"""Batch multi-convex trajectory optimization for a multi-circle holonomic robot."""

__version__ = "0.1.0"
