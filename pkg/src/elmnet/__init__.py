"""Recurrent networks of expressive leaky-memory neurons, with training,
budget-tradeoff analysis, and fitting tools."""

__version__ = "0.1.0"
