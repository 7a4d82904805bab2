"""Discrete-event simulation of Echo location verification and attacks on it."""

__version__ = "0.1.0"
