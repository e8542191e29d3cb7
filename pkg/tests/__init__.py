"""Test suite for the segment bug locator."""
