"""SINR meta distribution of UAV-assisted cellular networks."""

__version__ = "0.1.0"
