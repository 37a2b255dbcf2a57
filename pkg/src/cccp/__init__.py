"""Consistent, central and comprehensive participation (CCCP) metrics for reply trees."""

__version__ = "0.1.0"
