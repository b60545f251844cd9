"""API for checking project status."""
