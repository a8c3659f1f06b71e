"""Random-forest pipeline for 3-month functional outcome prediction after acute stroke."""

__version__ = "0.1.0"
