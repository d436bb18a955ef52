"""Coulomb-kernel MMD autoencoders, particle experiments and evaluation tools."""

__version__ = "0.1.0"
