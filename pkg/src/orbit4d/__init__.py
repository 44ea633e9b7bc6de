"""orbit4d: orbital-video generation and 4D reconstruction of dynamic assets."""

__version__ = "0.1.0"
