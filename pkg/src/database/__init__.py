"""Database models and operations for experiment records."""
