"""Logical-error classification and augmentation toolkit."""

__version__ = "0.1.0"
