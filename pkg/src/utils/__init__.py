"""Utility modules for configuration, validation, and logging."""
