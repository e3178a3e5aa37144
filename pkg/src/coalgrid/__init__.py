"""Coalitional cost optimization for smart-grid household communities."""
__version__ = "0.1.0"
