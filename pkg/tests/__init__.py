"""Tests for the ge2e package."""
