"""Compile fixed-length grammar constraints into layered automata."""
__version__ = "0.1.0"
