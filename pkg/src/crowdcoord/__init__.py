"""Coordination model dynamics and collaboration-log analytics."""

__version__ = "0.1.0"
