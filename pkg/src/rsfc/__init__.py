"""Resting-state functional connectivity features and classifiers for ASD detection."""

__version__ = "0.1.0"
