"""GE2E text-independent speaker verification."""
