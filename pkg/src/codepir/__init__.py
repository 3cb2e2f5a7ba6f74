"""Code-based single-server private information retrieval and its attacks."""

__version__ = "0.1.0"
