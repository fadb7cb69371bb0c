"""Roots of period polynomials of newforms and the circle |z| = 1/√N."""

__version__ = "0.1.0"
