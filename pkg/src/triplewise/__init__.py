"""Hierarchical latent-variable question generation for conversation triples."""

__version__ = "0.1.0"
