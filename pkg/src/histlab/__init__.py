"""Consistent-histories toolkit for a wave packet in an infinite square well."""

__version__ = "0.1.0"
