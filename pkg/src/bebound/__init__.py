"""Certified bounds on the Berry-Esseen constant for Bernoulli summands."""

__version__ = "0.1.0"
