"""Exact and sampled UST / LERW boundary probabilities on grid graphs."""
__version__ = "0.1.0"
