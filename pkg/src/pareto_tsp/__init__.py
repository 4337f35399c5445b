"""Approximation algorithms for multi-criteria traveling salesman problems."""

__version__ = "0.1.0"
