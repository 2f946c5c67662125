"""oscilab: spectral-numerics and Monte Carlo laboratory for the quantum
harmonic oscillator and its lens-transformed Schrodinger flows."""

__version__ = "0.1.0"
