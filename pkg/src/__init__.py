"""Segment bug locator - statistical bug localization for segmented quantum programs."""

__version__ = "0.1.0"
