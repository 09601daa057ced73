"""Fragment-based comparison of hidden Markov models."""

__version__ = "0.1.0"
