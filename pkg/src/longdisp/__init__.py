"""Construction and verification of vectors with prescribed long displacement data."""

__version__ = "0.1.0"
