"""Discrete conformal metrics, padded partitions and heat-kernel certificates on finite graphs."""

__version__ = "0.1.0"
