"""Command-line interface tools."""
