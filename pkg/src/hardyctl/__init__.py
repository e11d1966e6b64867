"""Numerical certificates for controllability and admissibility of diagonal
and Jordan semigroup systems via Carleson measures and Hardy-space
interpolation on the right half-plane."""

__version__ = "0.1.0"
