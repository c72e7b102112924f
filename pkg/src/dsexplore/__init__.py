"""Anytime multi-objective design space exploration for embedded system synthesis."""

__version__ = "0.1.0"
