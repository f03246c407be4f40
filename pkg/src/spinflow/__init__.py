"""Spinorial heat flow on flat periodic domains."""

__version__ = "0.1.0"
