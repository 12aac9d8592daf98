"""Randomized gossip on signed graphs: belief dynamics, spectral thresholds,
structural balance and Monte Carlo experiments."""

__version__ = "0.1.0"
