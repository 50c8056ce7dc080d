"""Phishing page detection from correlated page and trusted-service evidence."""

__version__ = "0.1.0"
