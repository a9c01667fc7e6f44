"""Dynamic approximate edit distance on precision sampling trees."""

__version__ = "0.1.0"
