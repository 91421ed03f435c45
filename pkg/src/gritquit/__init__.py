"""Optimal impulse control of a product-development drawdown process."""

__version__ = "0.1.0"
