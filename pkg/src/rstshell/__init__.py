"""Rescaled refined shell theory toolkit."""

__version__ = "0.1.0"
