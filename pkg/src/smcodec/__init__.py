"""Robust coding of permutation-encrypted images via structural compressive sampling."""

__version__ = "0.1.0"
