"""Anomalous follower-batch detection on follower maps."""

__version__ = "0.1.0"
