"""Relaxation dynamics of symmetric lattice models perturbed by local impurities."""
__version__ = "0.1.0"
