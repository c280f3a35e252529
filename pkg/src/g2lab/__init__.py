"""Numerical laboratory for the moduli geometry of torsion-free G2-structures."""
__version__ = "0.1.0"
