"""Enrolled speakers API."""
