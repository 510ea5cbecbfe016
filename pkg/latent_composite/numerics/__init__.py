"""Numerical kernels: normal probabilities, linear algebra, derivatives, optimization."""
