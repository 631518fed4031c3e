"""Evolutionary discovery of programs from input-output examples."""

__version__ = "0.1.0"
