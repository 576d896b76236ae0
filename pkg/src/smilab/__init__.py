"""smilab: stochastic-trajectory operator dressing and decoherence experiments."""

__version__ = "0.1.0"
